// Central finite differences in Wirtinger form:
//   d_mu    = (d/dx_mu - i d/dy_mu)/2
//   d_mubar = (d/dx_mu + i d/dy_mu)/2
// used by the self-check machinery and the generic gauge-potential path.
#pragma once

#include <type_traits>
#include <utility>

#include "kahlerflow/types.hpp"

namespace kahlerflow::fd {

inline constexpr double default_step = 1e-4;

namespace detail {

template <class F>
auto eval_shift(F&& f, const CVector& z, int i, double dx, double dy) {
    CVector w = z;
    w(i) += Complex(dx, dy);
    return f(w);
}

}  // namespace detail

// First real partials, then the Wirtinger combinations.  Scalar fields.
template <class F>  // F: const CVector& -> double
Complex d1(F&& f, const CVector& z, int mu, double h) {
    const double fx = (detail::eval_shift(f, z, mu, h, 0) - detail::eval_shift(f, z, mu, -h, 0)) / (2 * h);
    const double fy = (detail::eval_shift(f, z, mu, 0, h) - detail::eval_shift(f, z, mu, 0, -h)) / (2 * h);
    return 0.5 * Complex(fx, -fy);
}

template <class F>
Complex d1_bar(F&& f, const CVector& z, int mu, double h) {
    const double fx = (detail::eval_shift(f, z, mu, h, 0) - detail::eval_shift(f, z, mu, -h, 0)) / (2 * h);
    const double fy = (detail::eval_shift(f, z, mu, 0, h) - detail::eval_shift(f, z, mu, 0, -h)) / (2 * h);
    return 0.5 * Complex(fx, fy);
}

// Vector fields (e.g. gauge potentials); component-wise Wirtinger derivative.
template <class F>  // F: const CVector& -> CVector
CVector d1_vec(F&& f, const CVector& z, int mu, double h) {
    const CVector fxp = detail::eval_shift(f, z, mu, h, 0);
    const CVector fxm = detail::eval_shift(f, z, mu, -h, 0);
    const CVector fyp = detail::eval_shift(f, z, mu, 0, h);
    const CVector fym = detail::eval_shift(f, z, mu, 0, -h);
    return 0.5 * ((fxp - fxm) / (2 * h) - I_UNIT * ((fyp - fym) / (2 * h)));
}

template <class F>
CVector d1_bar_vec(F&& f, const CVector& z, int mu, double h) {
    const CVector fxp = detail::eval_shift(f, z, mu, h, 0);
    const CVector fxm = detail::eval_shift(f, z, mu, -h, 0);
    const CVector fyp = detail::eval_shift(f, z, mu, 0, h);
    const CVector fym = detail::eval_shift(f, z, mu, 0, -h);
    return 0.5 * ((fxp - fxm) / (2 * h) + I_UNIT * ((fyp - fym) / (2 * h)));
}

namespace detail {

// d^2 f / (dt_i dt_j) over real chart coordinates, t = x or y component.
template <class F>
double second_partial(F&& f, const CVector& z, int i, bool i_imag, int j, bool j_imag, double h) {
    if (i == j && i_imag == j_imag) {
        const double fp = eval_shift(f, z, i, i_imag ? 0 : h, i_imag ? h : 0);
        const double fm = eval_shift(f, z, i, i_imag ? 0 : -h, i_imag ? -h : 0);
        return (fp - 2 * f(z) + fm) / (h * h);
    }
    auto shift2 = [&](double si, double sj) {
        CVector w = z;
        w(i) += i_imag ? Complex(0, si) : Complex(si, 0);
        w(j) += j_imag ? Complex(0, sj) : Complex(sj, 0);
        return f(w);
    };
    return (shift2(h, h) - shift2(h, -h) - shift2(-h, h) + shift2(-h, -h)) / (4 * h * h);
}

}  // namespace detail

// Mixed Wirtinger second derivative d_mu d_nubar of a real scalar field.
template <class F>  // F: const CVector& -> double
Complex d2_mixed(F&& f, const CVector& z, int mu, int nu, double h) {
    const double xx = detail::second_partial(f, z, mu, false, nu, false, h);
    const double yy = detail::second_partial(f, z, mu, true, nu, true, h);
    const double xy = detail::second_partial(f, z, mu, false, nu, true, h);
    const double yx = detail::second_partial(f, z, mu, true, nu, false, h);
    return 0.25 * Complex(xx + yy, xy - yx);
}

}  // namespace kahlerflow::fd
