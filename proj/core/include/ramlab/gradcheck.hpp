#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ramlab/graph.hpp"
#include "ramlab/rng.hpp"

namespace ramlab {

struct GradCheckReport {
  double max_rel_err = 0;
  std::string worst;  // "param[i,j]" of the worst entry
  int entries_checked = 0;
};

// Central-difference check of analytic gradients. `loss` must rebuild its
// graph from the current parameter values, run backward, and return the
// scalar loss; gradients accumulate into each Parameter::grad. Meant to
// run at double precision with the default step 1e-5.
//
// If max_entries > 0, a seeded subsample of coordinates is checked;
// otherwise every coordinate is.
template <typename S>
GradCheckReport grad_check(const std::function<S()>& loss,
                           const std::vector<Parameter<S>*>& params,
                           S step = S(1e-5), int max_entries = 0,
                           uint64_t subsample_seed = 17) {
  for (auto* p : params) p->zero_grad();
  (void)loss();
  std::vector<Mat<S>> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  long total = 0;
  for (auto* p : params) total += p->size();
  double keep = max_entries > 0 ? std::min(1.0, (double)max_entries / (double)total) : 1.0;
  Rng pick = Rng::substream(subsample_seed, {kStreamTest});

  GradCheckReport rep;
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter<S>& p = *params[i];
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        if (keep < 1.0 && pick.next_double() > keep) continue;
        S saved = p.value(r, c);
        p.value(r, c) = saved + step;
        S up = loss();
        p.value(r, c) = saved - step;
        S down = loss();
        p.value(r, c) = saved;
        S numeric = (up - down) / (2 * step);
        S a = analytic[i](r, c);
        double denom = std::max({std::abs((double)a), std::abs((double)numeric), 1e-3});
        double rel = std::abs((double)(a - numeric)) / denom;
        ++rep.entries_checked;
        if (rel > rep.max_rel_err) {
          rep.max_rel_err = rel;
          rep.worst = p.name + "[" + std::to_string(r) + "," + std::to_string(c) + "]";
        }
      }
    }
  }
  // leave gradients as the analytic ones for the unperturbed point
  for (auto* p : params) p->zero_grad();
  (void)loss();
  return rep;
}

}  // namespace ramlab
