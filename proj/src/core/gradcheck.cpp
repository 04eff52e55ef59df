#include "lmlt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "lmlt/tape.hpp"

namespace lmlt {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double eval(const std::function<TensorD()>& loss) {
  TensorD out = loss();
  if (out.shape() != Shape{1, 1, 1, 1}) throw ShapeError("gradcheck loss must be scalar, got " + out.shape().str());
  return out.item();
}

}  // namespace

CheckReport fd_gradcheck_params(const std::function<TensorD()>& loss, const std::vector<NamedParam>& params,
                                const GradcheckOptions& options) {
  std::vector<NamedParam> ps = params;
  for (auto& p : ps) {
    if (!all_finite(p.tensor.data())) throw ShapeError("gradcheck input '" + p.name + "' is not finite");
  }

  std::vector<std::vector<double>> analytic;
  {
    Tape<double> tape;
    TapeScope<double> scope(tape);
    std::vector<bool> previous;
    for (auto& p : ps) {
      previous.push_back(p.tensor.requires_grad());
      p.tensor.zero_grad();
      p.tensor.set_requires_grad(true);
    }
    TensorD out = loss();
    tape.backward(out);
    for (std::size_t k = 0; k < ps.size(); ++k) {
      auto g = ps[k].tensor.grad();
      if (g.empty()) {
        analytic.emplace_back(static_cast<std::size_t>(ps[k].tensor.numel()), 0.0);
      } else {
        analytic.emplace_back(g.begin(), g.end());
      }
      ps[k].tensor.zero_grad();
      ps[k].tensor.set_requires_grad(previous[k]);
    }
  }
  if (options.tamper) options.tamper(analytic);

  const double base = eval(loss);
  const double again = eval(loss);
  if (std::memcmp(&base, &again, sizeof base) != 0) {
    throw DeterminismError("loss differs between two evaluations at the same point");
  }

  CheckReport report;
  report.tol = options.tol;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto data = ps[k].tensor.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + options.eps;
      const double fp = eval(loss);
      data[i] = orig - options.eps;
      const double fm = eval(loss);
      data[i] = orig;
      const double numeric = (fp - fm) / (2.0 * options.eps);
      const double rel = relative_error(analytic[k][i], numeric);
      ++report.coordinates;
      if (rel > report.max_rel_error || report.worst_index < 0) {
        report.max_rel_error = rel;
        report.worst_param = ps[k].name;
        report.worst_index = static_cast<std::int64_t>(i);
        report.worst_analytic = analytic[k][i];
        report.worst_numeric = numeric;
      }
    }
  }
  report.pass = report.max_rel_error <= options.tol;
  return report;
}

CheckReport fd_gradcheck(const std::function<TensorD(const TensorD&)>& f, const TensorD& x, double eps, double tol) {
  TensorD handle = x.clone();
  GradcheckOptions options;
  options.eps = eps;
  options.tol = tol;
  return fd_gradcheck_params([&] { return f(handle); }, {NamedParam{"x", handle}}, options);
}

}  // namespace lmlt
