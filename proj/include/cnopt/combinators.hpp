#pragma once

#include "cnopt/cn_form.hpp"

#include <optional>

namespace cnopt {

/// [g(x) : 0 * y] with one dummy lifted coordinate; exact.
CnForm trivial_form(const ScalarField& g, std::string name = "trivial");

/// a1 * f1 + a2 * f2 over a shared x with concatenated y = (y1, y2).
/// Negative or zero scalars are only allowed when both inputs are exact.
CnForm scale_add(const CnForm& f1, const CnForm& f2, double a1, double a2);

CnForm negate_exact(const CnForm& f);

/// f1 * f2 via u_k = g_k, v_k = u_k^2 and 0.5 * ((u1 + u2)^2 - v1 - v2).
CnForm product_exact(const CnForm& f1, const CnForm& f2);

/// phi(f) for a convex nondecreasing phi: R -> R. The caller attests the
/// shape of phi; it is spot-checked on sampled values of g.
CnForm compose_monotone(const ScalarField& phi, bool phi_convex_increasing, const CnForm& f,
                        std::optional<BProvider> composed_B = std::nullopt);

/// d(x) - c(x) as [d - z : c - z] with one fresh coordinate z.
CnForm from_dc(const ScalarField& d, const ScalarField& c, std::optional<BProvider> d_B = std::nullopt);

}  // namespace cnopt
