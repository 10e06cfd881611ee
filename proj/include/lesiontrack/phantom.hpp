#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lesiontrack/manifest.hpp"
#include "lesiontrack/rng.hpp"
#include "lesiontrack/volume.hpp"

namespace lesiontrack {

/// Probabilities over per-lesion baseline -> follow-up transitions. `new`
/// keeps the lesion stable and adds an unrelated lesion at follow-up.
struct TransitionMix {
  double stable = 0.45;
  double grow = 0.15;
  double shrink = 0.15;
  double resolve = 0.10;
  double appear_new = 0.05;
  double merge = 0.05;
  double split = 0.05;

  Transition sample(RandomStream& rng) const;
  double total() const { return stable + grow + shrink + resolve + appear_new + merge + split; }
};

/// Registration error magnitude: |N(0, inlier_sigma)| with probability
/// prob_inlier, else Exponential(mean tail_scale). Direction is isotropic.
struct RegistrationErrorModel {
  double prob_inlier = 0.7;
  double inlier_sigma_mm = 3.0;
  double tail_scale_mm = 12.0;

  double sample_magnitude(RandomStream& rng) const;
  double cdf(double r_mm) const;
};

struct PhantomConfig {
  Dims volume_dims{96, 96, 96};
  Spacing spacing{1.0, 1.0, 3.0};
  std::array<int, 2> lesion_count_range{3, 6};
  std::array<double, 2> lesion_radii_range_mm{4.0, 10.0};
  double min_gap_mm = 4.0;  // extra clearance between lesions, on top of room to grow
  TransitionMix transition_mix;
  RegistrationErrorModel reg_error;
  double missing_propagation_fraction = 0.0;
  std::uint64_t seed = 0;

  /// InvalidInput on violated invariants.
  void validate() const;
};

struct PhantomScan {
  IntensityVolume ct;
  LabelVolume instances;
};

struct PhantomCase {
  std::string case_id;
  PhantomScan baseline;
  PhantomScan followup;
  std::vector<LesionRecord> lesions;  // sorted by lesion id
};

/// Ellipsoidal lesions on a noisy soft-tissue background at two timepoints.
/// PlacementError when lesions cannot be placed without overlap.
PhantomCase generate_case(const PhantomConfig& cfg, const std::string& case_id);

/// Case ids used by generate_dataset: case_000, case_001, ...
std::string phantom_case_id(int index);

/// Writes `<out>/<case_id>/{baseline,followup}_{ct,instances}.nii.gz` and
/// `<out>/manifest.json`; returns the manifest. IoError if any target exists.
std::vector<LesionRecord> generate_dataset(const PhantomConfig& cfg, int n_cases, const std::filesystem::path& out_dir,
                                           int workers = 1);

}  // namespace lesiontrack
