#include "changecap/grad_check.hpp"

#include "changecap/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace changecap {

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << " worst " << worst << " at '" << worst_param << "'";
  return os.str();
}

GradCheckReport grad_check(const std::function<Tensor()>& build, const std::vector<Tensor>& params,
                           const GradCheckOptions& opts) {
  const auto eval = [&build]() {
    NoGradGuard ng;
    return build().item();
  };

  const Real l0 = eval();
  const Real l1 = eval();
  if (std::memcmp(&l0, &l1, sizeof(Real)) != 0) {
    throw std::runtime_error("grad_check aborted: loss is not deterministic (" +
                             std::to_string(l0) + " vs " + std::to_string(l1) + ")");
  }

  for (const Tensor& p : params) {
    if (!p.requires_grad()) {
      throw std::invalid_argument("grad_check: parameter '" + p.name() + "' has requires_grad off");
    }
    const_cast<Tensor&>(p).zero_grad();
  }
  Tensor loss = build();
  backward(loss);

  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  for (const Tensor& p : params) {
    analytic.push_back(p.has_grad() ? p.grad() : Mat::Zero(p.rows(), p.cols()).eval());
  }

  GradCheckReport report;
  report.pass = true;
  const Real h = opts.step;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi];
    Mat& theta = p.mutable_value();
    const Index n = theta.size();

    std::vector<Index> entries;
    if (opts.max_entries_per_param > 0 && n > opts.max_entries_per_param) {
      SplitMix64 rng(SplitMix64::split(opts.sample_seed, pi));
      entries.reserve(static_cast<std::size_t>(opts.max_entries_per_param));
      for (Index i = 0; i < opts.max_entries_per_param; ++i) {
        entries.push_back(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
      }
    } else {
      entries.resize(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) entries[static_cast<std::size_t>(i)] = i;
    }

    Real worst_here = 0.0;
    for (Index flat : entries) {
      Real* cell = theta.data() + flat;
      const Real saved = *cell;
      *cell = saved + h;
      const Real fp = eval();
      *cell = saved - h;
      const Real fm = eval();
      *cell = saved;
      const Real numeric = (fp - fm) / (2.0 * h);
      const Real a = analytic[pi](flat / theta.cols(), flat % theta.cols());
      const Real rel = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
      worst_here = std::max(worst_here, rel);
    }

    const std::string key = p.name().empty() ? "param" + std::to_string(pi) : p.name();
    report.max_rel_error[key] = worst_here;
    if (worst_here > report.worst) {
      report.worst = worst_here;
      report.worst_param = key;
    }
    if (worst_here > opts.tolerance) report.pass = false;
  }
  return report;
}

}  // namespace changecap
