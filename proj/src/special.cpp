#include "cvhl/special.hpp"

#include <cmath>

namespace cvhl {

static double dawson_series(double x) {
    // F(x) = sum_k t_k, t_0 = x, t_{k+1} = t_k * (-2 x^2) * (2k+1)/(2k+3)... with
    // double factorial form F = sum (-1)^k 2^k x^{2k+1} / (2k+1)!!
    const double x2 = x * x;
    double term = x, sum = x;
    for (int k = 1; k < 60; ++k) {
        term *= -2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum))
            break;
    }
    return sum;
}

static double dawson_rybicki(double x) {
    // F(x) ~ (1/sqrt(pi)) sum_{n odd} exp(-(x - n h)^2)/n, error ~ exp(-(pi/2h)^2)
    const double h = 0.25;
    const double inv_sqrt_pi = 0.5641895835477563;
    const int n0 = static_cast<int>(std::floor(x / h));
    double sum = 0.0;
    for (int n = n0 - 40; n <= n0 + 40; ++n) {
        if ((n & 1) == 0 || n == 0)
            continue;
        const double d = x - n * h;
        sum += std::exp(-d * d) / n;
    }
    return inv_sqrt_pi * sum;
}

static double dawson_asymptotic(double x) {
    // F(x) ~ 1/(2x) * (1 + 1/(2x^2) + 3/(4x^4) + ...), t_{k+1} = t_k (2k+1)/(2x^2)
    const double x2 = 2.0 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < 30; ++k) {
        term *= (2.0 * k + 1.0) / x2;
        if (std::abs(term) < 1e-17)
            break;
        sum += term;
    }
    return sum / (2.0 * x);
}

double dawson(double x) {
    const double ax = std::abs(x);
    double v;
    if (ax < 1.0)
        v = dawson_series(ax);
    else if (ax < 6.5)
        v = dawson_rybicki(ax);
    else
        v = dawson_asymptotic(ax);
    return x < 0.0 ? -v : v;
}

} // namespace cvhl
