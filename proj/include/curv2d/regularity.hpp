#pragma once

#include <string>
#include <vector>

#include "curv2d/system.hpp"

namespace curv2d {

struct ConvexityData {
    double alpha = 0.0;
    double beta = 0.0;
    int epsilon = +1;
};

struct GridSpec {
    double q1_min = -1.0, q1_max = 1.0;
    double q2_min = -1.0, q2_max = 1.0;
    double u_min = 0.0, u_max = 0.0;
    int resolution = 5;  // nodes per axis, >= 2
};

struct RegularityReport {
    double strong_convexity_min = 0.0;   // min |det(f_u, f_uu)| over the grid
    double transversality_min = 0.0;     // min |det(f, f_u)| over the grid
    double strong_convexity_min_scaled = 0.0;  // minima of |det| / (|v1||v2|)
    double transversality_min_scaled = 0.0;
    std::string epsilon;  // "+1", "-1" or "mixed"
    bool strong_convexity_pass = false;
    bool transversality_pass = false;
    GridSpec grid;
    double tolerance = 0.0;

    bool pass() const { return strong_convexity_pass && transversality_pass; }
    std::string to_json() const;
};

struct AbnormalRoot {
    double u_ab = 0.0;
    double residual = 0.0;
};

struct AbnormalLocusSample {
    StatePoint q;
    double u_ab = 0.0;
    double residual = 0.0;
    double strong_convexity = 0.0;
};

/// det(f_u, f_uu) at (q,u); nonzero iff strong convexity holds there.
double strong_convexity_residual(const SystemModel& system, StatePoint q, double u);

/// det(f, f_u) at (q,u); zero on the abnormal locus.
double transversality_residual(const SystemModel& system, StatePoint q, double u);

/// Solves f_uu = -eps*alpha*f - beta*f_u with alpha > 0.
ConvexityData convexity_decomposition(const SystemModel& system, StatePoint q, double u);

RegularityReport regularity_scan(const SystemModel& system, const GridSpec& grid,
                                 double tolerance = 1e-9);

/// Root of u -> det(f, f_u)(q, u) near u_guess (bracketed bisection refined
/// by Newton); throws Error(no_root) when no bracket is found.
AbnormalRoot abnormal_locus_find(const SystemModel& system, StatePoint q, double u_guess);

}  // namespace curv2d
