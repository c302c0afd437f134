#pragma once

namespace cvhl {

// Dawson's integral F(x) = e^{-x^2} \int_0^x e^{t^2} dt.
// Maclaurin series for small |x|, Rybicki's sampling expansion in the middle
// range, asymptotic series for large |x|; absolute accuracy ~1e-15.
double dawson(double x);

} // namespace cvhl
