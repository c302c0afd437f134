#include "cvhl/trace_io.hpp"
#include "cvhl/errors.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cvhl {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
    throw std::invalid_argument(path + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, const std::string& path, int line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size())
            parse_fail(path, line, "trailing characters in numeric field '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        parse_fail(path, line, "not a number: '" + s + "'");
    } catch (const std::out_of_range&) {
        parse_fail(path, line, "number out of range: '" + s + "'");
    }
}

} // namespace

void atomic_write_text(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path() && !target.parent_path().empty())
        fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open for writing: " + tmp.string());
        out << contents;
        out.flush();
        if (!out)
            throw std::runtime_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec)
        throw std::runtime_error("rename to " + path + " failed: " + ec.message());
}

void write_trace(const HomodyneTrace& trace, const std::string& path) {
    std::ostringstream out;
    out << "# sample_rate_hz=" << fmt17(trace.sample_rate) << "\n";
    out << "# demod_frequency_hz=" << fmt17(trace.demod_frequency) << "\n";
    out << "# calibration_scale=" << fmt17(trace.calibration_scale) << "\n";
    out << "# source_label=" << trace.source_label << "\n";
    out << "# seed=" << trace.seed << "\n";
    out << "index,t_s,theta_rad,x_sn\n";
    for (std::size_t k = 0; k < trace.samples.size(); ++k) {
        const auto& s = trace.samples[k];
        out << k << ',' << fmt17(s.t) << ',' << fmt17(s.theta) << ',' << fmt17(s.x) << "\n";
    }
    atomic_write_text(path, out.str());
}

HomodyneTrace read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open trace file: " + path);
    HomodyneTrace trace;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    double prev_t = -1e300;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            const std::size_t ws = body.find_first_not_of(' ');
            if (ws == std::string::npos)
                continue;
            body = body.substr(ws);
            const std::size_t eq = body.find('=');
            if (eq == std::string::npos)
                continue;  // free-form comment
            const std::string key = body.substr(0, eq);
            const std::string val = body.substr(eq + 1);
            if (key == "sample_rate_hz")
                trace.sample_rate = parse_double(val, path, lineno);
            else if (key == "demod_frequency_hz")
                trace.demod_frequency = parse_double(val, path, lineno);
            else if (key == "calibration_scale")
                trace.calibration_scale = parse_double(val, path, lineno);
            else if (key == "source_label")
                trace.source_label = val;
            else if (key == "seed")
                trace.seed = std::strtoull(val.c_str(), nullptr, 10);
            continue;
        }
        if (!header_seen) {
            if (line != "index,t_s,theta_rad,x_sn")
                parse_fail(path, lineno, "expected header 'index,t_s,theta_rad,x_sn'");
            header_seen = true;
            continue;
        }
        std::string fields[4];
        int nf = 0;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (nf >= 4)
                parse_fail(path, lineno, "too many fields");
            fields[nf++] = line.substr(start, comma == std::string::npos ? comma : comma - start);
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        if (nf != 4)
            parse_fail(path, lineno, "expected 4 comma-separated fields");
        const double idx = parse_double(fields[0], path, lineno);
        if (idx != static_cast<double>(trace.samples.size()))
            parse_fail(path, lineno, "sample index out of sequence");
        TraceSample s;
        s.t = parse_double(fields[1], path, lineno);
        s.theta = parse_double(fields[2], path, lineno);
        s.x = parse_double(fields[3], path, lineno);
        if (!std::isfinite(s.x) || !std::isfinite(s.theta) || !std::isfinite(s.t))
            parse_fail(path, lineno, "non-finite value");
        if (s.t <= prev_t)
            parse_fail(path, lineno, "time stamps must be strictly increasing");
        prev_t = s.t;
        trace.samples.push_back(s);
    }
    if (!header_seen)
        throw std::invalid_argument(path + ": missing trace header");
    if (trace.samples.empty())
        throw DataQualityError(path + ": trace contains no samples");
    return trace;
}

} // namespace cvhl
