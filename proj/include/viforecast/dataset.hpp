#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "viforecast/core.hpp"

namespace viforecast {

/// One multivariate series. Rows [0, train_end) may be used for training;
/// forecast windows used for evaluation start at or after train_end.
struct Dataset {
    std::string name;
    std::string frequency;
    int period = 1;
    std::optional<int> period_override;
    std::vector<std::string> columns;
    Matrix values;
    int train_end = 0;

    int length() const { return static_cast<int>(values.rows()); }
    int variates() const { return static_cast<int>(values.cols()); }
};

struct DatasetArchive {
    std::vector<Dataset> datasets;

    const Dataset& find(const std::string& name) const;
    bool empty() const { return datasets.empty(); }
};

/// Reads <root>/<name>/{data.csv, meta.json} for every subdirectory, sorted by
/// name. Periods come from meta.json, then the frequency table, then the
/// autocorrelation fallback (cached under $VIFORECAST_CACHE when set).
DatasetArchive load_dataset_archive(const std::filesystem::path& root);

/// Writes values with 17 significant digits so doubles round-trip exactly.
void save_dataset_archive(const std::filesystem::path& root, const DatasetArchive& archive);

/// Generators for the synthetic archive.
struct SynthSeries {
    std::string name;
    std::string generator = "sinusoid";  // sinusoid | trend_season | ar1 | spike
    std::string frequency = "H";
    int length = 2000;
    int variates = 1;
    int period = 24;
    double amplitude = 1.0;
    double phase = 0.0;
    double noise_std = 0.1;
    double slope = 0.0;        // trend_season: per-step drift
    double ar_coef = 0.8;      // ar1
    double spike_sigma = 100.0;  // spike: magnitude in units of the clean series' std
    double spike_prob = 0.03;
    double train_fraction = 0.8;
};

struct SynthSpec {
    std::uint64_t seed = 0;
    std::vector<SynthSeries> series;
};

SynthSpec parse_synth_spec(const std::string& json_text);
Dataset synthesize(const SynthSeries& series, std::uint64_t seed);
DatasetArchive synthesize(const SynthSpec& spec);

}  // namespace viforecast
