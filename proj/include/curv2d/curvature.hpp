#pragma once

#include <random>

#include "curv2d/extremal.hpp"
#include "curv2d/system.hpp"

namespace curv2d {

struct CurvatureSample {
    StatePoint q;
    double u = 0.0;
    double kappa = 0.0;
    double verticality_residual = 0.0;  // |B_q|_inf / (|B_u| + 1e-6)
    int epsilon = +1;
};

/// Lie bracket [X, Y] = (dY) X - (dX) Y. The returned field supports one
/// dual level less than its operands (Error(derivative_unavailable) beyond).
FieldPtr lie_bracket(FieldPtr X, FieldPtr Y);

/// The control curvature at (q,u) from the commutator identity
/// [h,[v,h]] = kappa v. eps = 0 picks the sign from the convexity
/// decomposition. Throws Error(verticality_violated) when the double
/// bracket fails to be vertical within tolerance.
CurvatureSample curvature_at(const SystemModel& system, StatePoint q, double u, int eps = 0);

/// Closed-form curvature of the normal_form family. For state-only a the
/// full cubic polynomial in u; for u-dependent a the u -> 0 leading value.
double curvature_series_normal(const SystemModel& system, StatePoint q, double u);

/// Gaussian curvature of the metric e^{2 phi} (dq1^2 + dq2^2):
/// K = -e^{-2 phi} (phi_11 + phi_22). Test oracle for conformal frames.
double gaussian_curvature_conformal(const Expr& phi, StatePoint q);
double gaussian_curvature_conformal(const std::string& phi_expr, StatePoint q);

/// A state diffeomorphism x = phi(q) plus a control reparametrization
/// u~ = psi(q, u), all given as expressions in the grammar.
struct FeedbackTransform {
    ExprPtr phi1, phi2;  // functions of q1, q2
    ExprPtr psi;         // function of q1, q2, u with d psi/du != 0
    std::string phi1_src, phi2_src, psi_src;

    static FeedbackTransform parse(const std::string& phi1, const std::string& phi2,
                                   const std::string& psi);

    Vec2 apply_state(StatePoint q) const;
    double apply_control(StatePoint q, double u) const;
};

/// Pushforward of the system under the transform, by evaluator composition
/// (Newton inversion of phi and psi, exact derivatives through duals).
SystemModel feedback_transform(const SystemModel& system, const FeedbackTransform& transform);

struct Box3 {
    double q1_min, q1_max, q2_min, q2_max, u_min, u_max;
};

/// Degree-2 polynomial perturbation of the identity with coefficients in
/// [-0.1, 0.1], rejection-sampled until phi is invertible and psi_u is
/// bounded away from zero on the box.
FeedbackTransform random_feedback_transform(std::mt19937_64& rng, const Box3& box);

}  // namespace curv2d
