#pragma once

#include <memory>
#include <string>
#include <vector>

#include "curv2d/curvature.hpp"
#include "curv2d/extremal.hpp"
#include "curv2d/system.hpp"

namespace curv2d {

struct Mat2 {
    double m[2][2] = {};
    double det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }
};

struct TransversalSample {
    double tau = 0.0;
    StatePoint q;           // point of N0
    double u = 0.0;         // control along the lifted curve
    Vec2 tangent;           // tangent of N0 at the sample
    double transversality;  // det(tangent, f(q, u0))
};

/// Projection of the commutator-flow curve tau -> e^{tau [v,h]}(lambda0)
/// together with its tangents; the covector family over N0 is lambda(q, u)
/// at the recorded controls.
struct TransversalCurve {
    StatePoint q0;
    double u0 = 0.0;
    int epsilon = +1;
    double sigma = 1.0;  // orientation sign applied to the flow direction
    std::vector<TransversalSample> samples;
};

TransversalCurve transversal_curve(const SystemModel& system, StatePoint q0, double u0, int eps,
                                   double tau_range, int n_samples);

struct ChartOptions {
    double x1_min = -0.25, x1_max = 0.25;
    double x2_min = -0.25, x2_max = 0.25;
    double u_min = -0.4, u_max = 0.4;  // feedback-control sampling range
    int resolution = 9;                // grid nodes per axis

    /// How the horizontal axis N0 is generated. frozen_control flows the
    /// u-frozen field (f_u(q, u0), 0); it reproduces systems already in
    /// normal form exactly. commutator_flow follows [v,h] instead (same
    /// curve germ for conformal frames, different parametrization and
    /// control drift in general).
    enum class Transversal { frozen_control, commutator_flow };
    Transversal transversal = Transversal::frozen_control;

    int eps = 0;  // 0: from the convexity decomposition at (q0, u0)
    int steps_per_unit = 1500;
    double u_switch = 0.05;  // blend point for the a-extraction formulas
};

struct ChartNode {
    StatePoint q;
    double u_vert = 0.0;
    Mat2 J;
};

/// Abstract view of the chart map used by verification and extraction, so
/// tests can wrap or perturb a chart.
class ChartMap {
  public:
    virtual ~ChartMap() = default;
    virtual StatePoint phi(double x1, double x2) const = 0;
    virtual Mat2 dphi(double x1, double x2) const = 0;
    virtual double vertical_control(double x1, double x2) const = 0;
    /// Combined query (position, vertical control, differential); the
    /// default delegates to the three virtuals.
    virtual ChartNode node(double x1, double x2) const;
};

struct ChartVerification {
    double max_feedback_residual = 0.0;   // |ftilde1 - utilde| after inversion
    double max_f2_at_zero = 0.0;          // |F2(x, 0) - 1|
    double max_df2_du_at_zero = 0.0;      // |dF2/du~(x, 0)|
    double max_form_residual = 0.0;       // |F2 - (1 - eps e^{2a} u~^2)|
    bool pass = false;
    std::string note;  // set when some residual could not be evaluated
    std::string to_json() const;
};

struct ChartGridNode {
    double x1, x2;
    double q1, q2;
    double u_vert;
};

struct ASample {
    double x1, x2, u;
    double a;
};

class ChartEngine;

/// Numerically realized microlocal chart around the extremal through
/// (q0, u0): phi maps chart coordinates to state space, the feedback is
/// u~ = ftilde1, and the pushed system reads (u~, 1 - eps e^{2a} u~^2).
class NormalFormChart {
  public:
    NormalFormChart(std::shared_ptr<const ChartEngine> engine, std::vector<ChartGridNode> grid,
                    std::vector<ASample> a_values, ChartVerification verification);

    const ChartMap& map() const;
    const ChartEngine& engine() const { return *engine_; }

    StatePoint phi(double x1, double x2) const;
    StatePoint phi_inverse(StatePoint q) const;
    double vertical_control(double x1, double x2) const;
    /// u~ = ftilde1(x, u), the feedback bringing the system to normal form.
    double feedback(double x1, double x2, double u) const;
    /// (f~1, f~2)(x, u~) of the post-feedback system; f~1 = u~ identically.
    Vec2 pushed_system(double x1, double x2, double u_tilde) const;
    double extract_a(double x1, double x2, double u_tilde) const;

    const std::vector<ChartGridNode>& grid() const { return grid_; }
    const std::vector<ASample>& a_values() const { return a_values_; }
    const ChartVerification& verification() const { return verification_; }
    int epsilon() const;
    const ChartOptions& options() const;
    StatePoint origin() const;
    double origin_control() const;

    std::string grid_csv() const;
    std::string a_samples_csv() const;
    std::string report_json() const;

  private:
    std::shared_ptr<const ChartEngine> engine_;
    std::vector<ChartGridNode> grid_;
    std::vector<ASample> a_values_;
    ChartVerification verification_;
};

NormalFormChart build_chart(const SystemModel& system, StatePoint q0, double u0,
                            ChartOptions options = {});

/// Residual check of the normal-form structure over the box, for any chart
/// map (possibly a perturbed one).
ChartVerification verify_normal_form(const SystemModel& system, const ChartMap& map, int eps,
                                     const ChartOptions& box);
ChartVerification verify_normal_form(const NormalFormChart& chart);

/// a(x1, x2, u~) recomputed from a chart map at one point.
double extract_chart_a(const SystemModel& system, const ChartMap& map, int eps, double x1,
                       double x2, double u_tilde, double u_switch = 0.05);

struct AbnormalOptions {
    double delta = 0.2;  // largest offset from u = 1
    int points = 3;      // Richardson stages (nodes at 1 - delta 2^{-k})
    double tolerance = 1e-3;
};

struct AbnormalExtension {
    double kappa_limit = 0.0;     // Richardson limit of kappa(q, u) as u -> 1
    double series_value = 0.0;    // -a_11(q,1) - a_1(q,1)^2
    double extrapolation_residual = 0.0;
};

/// Limit of the control curvature along the abnormal direction u -> 1 for
/// abnormal_form systems, versus the closed-form series value.
AbnormalExtension abnormal_extension(const SystemModel& system, StatePoint q,
                                     AbnormalOptions options = {});

}  // namespace curv2d
