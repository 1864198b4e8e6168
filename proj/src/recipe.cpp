#include "delayiqc/recipe.hpp"

#include "delayiqc/error.hpp"

namespace delayiqc {

Multiplier make_multiplier(const RecipeItem& item, double tau_bar) {
  const std::string& n = item.name;
  if (n == "pi1") return make_pi1();
  if (n == "pi2bar") return make_pi2_bar(tau_bar);
  if (n == "pi3bar") return make_pi3_bar(tau_bar);
  if (n == "pi4") return make_pi4(item.rate);
  if (n == "pi5") return make_pi5(tau_bar, item.rate);
  if (n == "pi6") return make_pi6(tau_bar, item.rate);
  throw Error(ErrorCode::kInvalidArgument, "unknown multiplier '" + n + "'");
}

std::vector<IqcTerm> Recipe::instantiate(double tau_bar) const {
  std::vector<IqcTerm> terms;
  for (const RecipeItem& item : items) {
    const Multiplier pi = make_multiplier(item, tau_bar);
    IqcTerm t;
    t.name = item.name;
    const bool constant = pi.pi11.is_static() && pi.pi21.is_static() && pi.pi22.is_static();
    if (constant && item.policy == FactorPolicy::kAuto) {
      // Full scaling X >= 0 on repeated channels.
      Matrix base(2, 2);
      base << pi.pi11.d()(0, 0), pi.pi21.d()(0, 0), pi.pi21.d()(0, 0), pi.pi22.d()(0, 0);
      t.base = base;
      t.factor.psi = StateSpace::identity(2 * nv);
      t.factor.m = kron(base, Matrix::Identity(nv, nv));
      t.factor.kind = FactorKind::kNatural;
      t.factor.hardness = FactorHardness::kNaturalHard;
    } else {
      const Multiplier rep = nv == 1 ? pi : scale_repeated(pi, nv, Matrix::Identity(nv, nv));
      t.factor = item.policy == FactorPolicy::kJSpectral ? j_spectral(rep, item.regularization)
                                                         : factorize(rep, item.policy);
    }
    terms.push_back(std::move(t));
  }
  return terms;
}

RecipeFn Recipe::fn() const {
  return [self = *this](double tau_bar) { return self.instantiate(tau_bar); };
}

FactorPolicy parse_factor_policy(const std::string& s) {
  if (s == "auto") return FactorPolicy::kAuto;
  if (s == "natural") return FactorPolicy::kNatural;
  if (s == "generic") return FactorPolicy::kGeneric;
  if (s == "j-spectral") return FactorPolicy::kJSpectral;
  throw Error(ErrorCode::kConfig, "unknown factorization '" + s + "'");
}

Recipe recipe_from_json(const Json& j, int nv) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::kConfig, "recipe: expected a nonempty list");
  Recipe r;
  r.nv = nv;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Json& e = j[i];
    const std::string where = "recipe[" + std::to_string(i) + "]";
    RecipeItem item;
    if (e.is_string()) {
      item.name = e.get<std::string>();
    } else if (e.is_object()) {
      for (const auto& [key, val] : e.items()) {
        if (key == "name") {
          item.name = val.get<std::string>();
        } else if (key == "rate") {
          item.rate = val.get<double>();
        } else if (key == "factorization") {
          item.policy = parse_factor_policy(val.get<std::string>());
        } else if (key == "regularization") {
          item.regularization = val.get<double>();
        } else {
          throw Error(ErrorCode::kConfig, where + ": unknown key '" + key + "'");
        }
      }
    } else {
      throw Error(ErrorCode::kConfig, where + ": expected a name or an object");
    }
    make_multiplier(item, 1.0);  // validates name and parameters
    r.items.push_back(item);
  }
  return r;
}

}  // namespace delayiqc
