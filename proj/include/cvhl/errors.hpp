#pragma once
#include <stdexcept>
#include <string>

namespace cvhl {

// Input/configuration problems map to CLI exit code 2 (std::invalid_argument
// is used for these throughout), data quality to 3, numerical failures to 4.
class DataQualityError : public std::runtime_error {
public:
    explicit DataQualityError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cvhl
