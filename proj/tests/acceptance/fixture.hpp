// Frozen acceptance fixture: tolerances and the end-to-end configuration
// the gate runs against. Calibrated once on the reference synthetic
// setup; do not loosen to make a regression pass.

#pragma once

#include <cstdint>

namespace fixture {

// numeric tolerances, per criterion
inline constexpr double kFedavgEquivalenceTol = 1e-9;
inline constexpr double kGradientRelTol = 1e-4;
inline constexpr double kGradientFdStep = 1e-4;
inline constexpr double kMetricOracleTol = 1e-12;
inline constexpr double kBlendTol = 1e-12;
inline constexpr double kResampleSineTol = 0.01;
inline constexpr double kPercentileTol = 1e-12;
inline constexpr double kPcaEigenTol = 1e-8;

// runtime ceilings, seconds
inline constexpr double kFedavgBudgetS = 1.0;
inline constexpr double kGradientBudgetS = 5.0;
inline constexpr double kMetricBudgetS = 1.0;
inline constexpr double kEndToEndBudgetS = 60.0;

// sample sizes
inline constexpr int kGradientInstances = 50;
inline constexpr int kMetricMatrices = 100;
inline constexpr int kEpisodeDraws = 1000;
inline constexpr int kTokenizeTrials = 200;

// end-to-end run: seeds and scale, frozen after calibration. Stage 1
// fine-tunes the encoder on an all-classes corpus; stage 2 personalizes
// on a type-cycled pool matching the default client profiles.
inline constexpr std::uint64_t kStage1Seed = 2026;
inline constexpr int kStage1Patients = 24;
inline constexpr int kStage1SegmentsPerClass = 4;
inline constexpr int kStage1MaxRounds = 40;
inline constexpr std::uint64_t kStage2Seed = 7777;
inline constexpr int kStage2Patients = 32;
inline constexpr int kStage2SegmentsPerClass = 18;
inline constexpr int kStage2MaxRounds = 40;

// per-client query-set balanced accuracy floor (the development oracle
// run on the frozen config scored 1.0 for every client; 0.85 leaves
// honest headroom without admitting a broken pipeline)
inline constexpr double kE2MinBalancedAccuracy = 0.85;

} // namespace fixture
