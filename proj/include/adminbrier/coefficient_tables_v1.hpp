#pragma once

// Coefficient tables, version 1, for the logit-hazard simulation designs.
// Every gamma_k is affine in its assigned covariates, which are drawn
// Uniform(-1, 1). Changing any number here changes every simulated dataset
// and therefore requires a new table version.
//
// Event table: gamma_k uses covariates (2k, 2k + 1), 18 in total.
//   gamma_2 in [0.075, 0.225] keeps the sine period 2*pi/gamma_2 in [28, 84].
// Censoring tables feed Q(t | x), thresholded at epsilon = 0.2:
//   complicated: same structure on 18 independent covariates (about 40% censored),
//   simple:      g = gamma_5 on 5 covariates (about 54% censored, C* spread over [35, 100]).

#include <array>
#include <cstddef>

namespace adminbrier::tables_v1 {

inline constexpr int kVersion = 1;

struct PairRow {
  double intercept;
  double w_first;
  double w_second;
};

inline constexpr std::array<PairRow, 9> kEvent{{
    {1.0, 0.5, 0.3},      // gamma_1: sine amplitude
    {0.15, 0.04, 0.035},  // gamma_2: sine frequency
    {0.0, 10.0, 10.0},    // gamma_3: sine phase
    {-6.3, 0.5, 0.3},     // gamma_4: sine level
    {-6.5, 0.6, 0.4},     // gamma_5: constant logit hazard
    {0.045, 0.015, 0.01}, // gamma_6: slope of the accelerating component
    {0.0, 0.6, 0.4},      // gamma_7..9: mixture logits
    {0.0, 0.6, 0.4},
    {0.0, 0.6, 0.4},
}};

inline constexpr std::array<PairRow, 9> kComplicatedCensor{{
    {1.0, 0.5, 0.3},
    {0.14, 0.04, 0.03},
    {0.0, 10.0, 10.0},
    {-5.6, 0.8, 0.6},
    {-5.8, 0.9, 0.7},
    {0.04, 0.015, 0.01},
    {0.0, 0.8, 0.6},
    {0.0, 0.8, 0.6},
    {0.0, 0.8, 0.6},
}};

inline constexpr double kSimpleCensorIntercept = -6.0;
inline constexpr double kSimpleCensorWeight = 0.3;
inline constexpr std::size_t kSimpleCensorCovariates = 5;

inline constexpr double kEpsilon = 0.2;
inline constexpr double kConstantHazard = 0.00084;

}  // namespace adminbrier::tables_v1
