#include "ctsynth/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ctsynth/error.hpp"

namespace ctsynth {

namespace {

struct Evaluation {
  double value = 0.0;
  std::vector<bool> branches;  // sign of every leaky_relu input, in tape order
};

Evaluation evaluate(const LossBuilder& f) {
  Tape tape;
  Evaluation e;
  e.value = tape.value(f(tape)).item();
  for (std::size_t id = 0; id < tape.size(); ++id) {
    const auto& node = tape.node(Var{id});
    if (node.kind != OpKind::leaky_relu) continue;
    for (double x : tape.value(Var{node.inputs.front()}).data()) e.branches.push_back(x > 0.0);
  }
  return e;
}

}  // namespace

const GradCheckEntry& GradCheckReport::worst() const {
  if (entries.empty()) throw StateError("empty gradient-check report");
  return *std::max_element(entries.begin(), entries.end(),
                           [](const auto& a, const auto& b) { return a.max_rel_err < b.max_rel_err; });
}

GradCheckReport grad_check(const LossBuilder& f, const std::vector<Parameter*>& params, double h) {
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be positive");

  const Evaluation first = evaluate(f);
  const Evaluation second = evaluate(f);
  if (first.value != second.value || first.branches != second.branches) throw ContractError("gradient check needs a deterministic loss; two evaluations differ");

  {
    Tape tape;
    Var loss = f(tape);
    tape.backward(loss);
  }

  GradCheckReport report;
  for (Parameter* p : params) {
    if (!p->has_grad) throw StateError("parameter " + p->name + " is not reachable from the loss builder");
    const Tensor analytic = p->grad;
    GradCheckEntry entry;
    entry.name = p->name;
    entry.elements = p->value.size();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const Evaluation plus = evaluate(f);
      p->value[i] = saved - h;
      const Evaluation minus = evaluate(f);
      p->value[i] = saved;
      const double numeric = (plus.value - minus.value) / (2.0 * h);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (plus.branches != first.branches || minus.branches != first.branches) {
        ++entry.kink_crossings;
      } else {
        entry.max_rel_err_smooth = std::max(entry.max_rel_err_smooth, err);
      }
      if (err > entry.max_rel_err || i == 0) {
        entry.max_rel_err = err;
        entry.worst_index = i;
        entry.analytic = a;
        entry.numeric = numeric;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.max_rel_err_smooth = std::max(report.max_rel_err_smooth, entry.max_rel_err_smooth);
    report.kink_crossings += entry.kink_crossings;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace ctsynth
