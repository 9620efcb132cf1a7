#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsn/energy.hpp"
#include "tsn/normalize.hpp"
#include "tsn/prepare.hpp"

namespace tsn {

// Representations a window pair can be embedded into before measuring
// distribution distances.
enum class FeatureSpace {
    inputs,       // the look-back, dim L
    windows,      // look-back plus horizon, dim L+H
    statistics,   // (mean, std) of the look-back, dim 2
    modulations,  // (delta, lambda) of the pair, dim 2
};

const char* feature_space_name(FeatureSpace s);

// Normalizations the diagnostic can apply before feature extraction.
enum class ShiftNorm {
    none,
    standard,  // one global affine map
    instance,  // per-window affine map from look-back statistics
};

const char* shift_norm_name(ShiftNorm n);

/**
 * Embeds window pairs into a feature space, normalizing each window first.
 * Horizons are normalized with their look-back's statistics.  The maps here
 * run with a zero epsilon so that per-window and global standardizations
 * are exact affine maps; constant look-backs (excluded by cleaning) would
 * make the per-window map singular and raise ZeroScale.
 */
std::vector<std::vector<double>> feature_map(const std::vector<WindowPair>& pairs,
                                             FeatureSpace space, ShiftNorm norm,
                                             const GlobalStats* global);

struct ShiftCell {
    FeatureSpace space;
    ShiftNorm norm;
    std::string shift;  // "temporal" or "spatial"
    EnergyDistance d2;
    std::size_t n_left = 0;
    std::size_t n_right = 0;
};

struct ShiftReport {
    std::string dataset;
    std::vector<ShiftCell> cells;
};

struct ShiftConfig {
    std::size_t sample_cap = 2000;  // windows drawn per split
    std::uint64_t seed = 7;
    bool export_features = false;  // dump per-cell feature matrices as CSV
};

/**
 * Distribution-shift diagnostic: samples windows from the training split,
 * the later-dates split (temporal shift: Train vs Test1) and the held-out
 * users split (spatial shift: Train vs Valid2), embeds them into every
 * feature space under every normalization, and measures squared energy
 * distances.  The same samples are reused across normalizations so cells
 * differ only by the map applied.
 */
ShiftReport shift_report(const CleanedDataset& data, const SplitAssignment& split,
                         const WindowSpec& spec, const ShiftConfig& config,
                         const std::string& dataset_name);

// Writes shift_report.json (raw statistics, both estimators) plus one CSV
// per feature space with display values clamped at zero.
void write_shift_report(const ShiftReport& report, const std::string& out_dir);

// Feature matrices for external embedding tools, one CSV per
// (space, normalization, split).
void export_shift_features(const CleanedDataset& data, const SplitAssignment& split,
                           const WindowSpec& spec, const ShiftConfig& config,
                           const std::string& out_dir);

}  // namespace tsn
