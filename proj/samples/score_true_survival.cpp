// Scores the true survival curve of the constant-hazard design with three
// Brier variants and prints a few grid times.

#include "adminbrier/adminbrier.hpp"

#include <cstdio>

int main() {
  using namespace adminbrier;
  const auto sc = build_scenario(ScenarioKind::constant_hazard, 5000, 7);
  const auto& s = *sc.true_survival;

  const auto km = reverse_kaplan_meier(sc.dataset);
  const auto ipcw = brier_ipcw(sc.dataset, s, km, WeightCap::unbounded(), true);
  const auto admin = brier_admin(sc.dataset, s);
  const auto clean = brier_uncensored(sc.t_star, s);

  std::printf("censored fraction %.3f\n", sc.censored_fraction());
  std::printf("%8s %10s %10s %10s\n", "t", "uncens", "ipcw-km", "admin");
  for (std::size_t j = 99; j < s.grid().size(); j += 200)
    std::printf("%8.1f %10.5f %10.5f %10.5f\n", s.grid()[j], clean.score[j].value_or(NAN), ipcw.score[j].value_or(NAN),
                admin.score[j].value_or(NAN));
}
