#ifndef DEID_STATS_HPP
#define DEID_STATS_HPP

#include <vector>

namespace deid {

struct PairedTTest {
  double t = 0.0;
  double p = 1.0;  // two-sided
  int dof = 0;
  bool degenerate = false;  // zero variance with nonzero mean difference
};

// Repeated-measures (paired) t-test on per-item differences a[i] - b[i].
// Throws LengthMismatch / TooFewSamples.
PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Two-sided p-value for Student's t with the given degrees of freedom,
// computed as I_{dof/(dof+t^2)}(dof/2, 1/2).
double student_t_two_sided_p(double t, int dof);

// Regularized incomplete beta I_x(a, b) via the modified Lentz continued
// fraction; accurate in the deep tail down to roughly 1e-300.
double regularized_incomplete_beta(double a, double b, double x);

}  // namespace deid

#endif  // DEID_STATS_HPP
