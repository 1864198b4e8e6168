#pragma once

#include <string>
#include <vector>

#include "delayiqc/factorization.hpp"
#include "delayiqc/lpv.hpp"
#include "delayiqc/matrix_io.hpp"

namespace delayiqc {

/// One multiplier of a recipe: catalog name plus its parameters.
struct RecipeItem {
  std::string name;  // pi1, pi2bar, pi3bar, pi4, pi5, pi6
  double rate = 0.0;
  FactorPolicy policy = FactorPolicy::kAuto;
  double regularization = 0.0;  // j-spectral only
};

struct Recipe {
  std::vector<RecipeItem> items;
  int nv = 1;

  /// Multipliers valid on [0, tau_bar], factorized, ready for the LMI.
  std::vector<IqcTerm> instantiate(double tau_bar) const;
  RecipeFn fn() const;
};

/// Multiplier for a single channel at the given maximum delay.
Multiplier make_multiplier(const RecipeItem& item, double tau_bar);

FactorPolicy parse_factor_policy(const std::string& s);

/// Accepts ["pi1", "pi3bar"] or [{"name": "pi4", "rate": 0.5}, ...].
Recipe recipe_from_json(const Json& j, int nv = 1);

}  // namespace delayiqc
