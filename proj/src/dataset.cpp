#include "viforecast/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <sstream>

namespace viforecast {

namespace fs = std::filesystem;
using nlohmann::json;

const Dataset& DatasetArchive::find(const std::string& name) const {
    for (const auto& d : datasets) {
        if (d.name == name) return d;
    }
    throw DataError("dataset '" + name + "' not found in archive");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

Matrix read_csv(const fs::path& path, std::vector<std::string>& columns) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + " is empty");
    columns = split_csv_line(line);
    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != columns.size()) {
            throw DataError(path.string() + ": row " + std::to_string(rows + 1) + " has " +
                            std::to_string(fields.size()) + " fields, header has " + std::to_string(columns.size()));
        }
        for (const auto& f : fields) {
            char* end = nullptr;
            const double v = std::strtod(f.c_str(), &end);
            if (end == f.c_str() || *end != '\0' || !std::isfinite(v)) {
                throw DataError(path.string() + ": non-finite or malformed value '" + f + "' in row " +
                                std::to_string(rows + 1));
            }
            values.push_back(v);
        }
        ++rows;
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(columns.size()));
    std::copy(values.begin(), values.end(), m.data());
    return m;
}

fs::path cache_file() {
    const char* dir = std::getenv("VIFORECAST_CACHE");
    if (dir == nullptr || *dir == '\0') return {};
    return fs::path(dir) / "periods.json";
}

int resolve_period(const Dataset& ds) {
    if (ds.period_override) return *ds.period_override;
    if (auto p = lookup_period(ds.frequency)) return *p;
    const fs::path cache = cache_file();
    const std::string key = ds.name + ":" + std::to_string(ds.length()) + "x" + std::to_string(ds.variates());
    json entries = json::object();
    if (!cache.empty() && fs::exists(cache)) {
        std::ifstream in(cache);
        try {
            entries = json::parse(in);
            if (entries.contains(key)) return entries[key].get<int>();
        } catch (const json::exception&) {
            entries = json::object();
        }
    }
    const Matrix history = ds.values.topRows(ds.train_end);
    const int period = infer_periodicity(ds.frequency, &history);
    if (!cache.empty()) {
        fs::create_directories(cache.parent_path());
        entries[key] = period;
        std::ofstream(cache) << entries.dump(2) << '\n';
    }
    return period;
}

}  // namespace

DatasetArchive load_dataset_archive(const fs::path& root) {
    if (!fs::is_directory(root)) {
        throw DataError("archive root " + root.string() + " is not a directory");
    }
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "data.csv")) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    DatasetArchive archive;
    for (const auto& dir : dirs) {
        Dataset ds;
        ds.values = read_csv(dir / "data.csv", ds.columns);
        std::ifstream meta_in(dir / "meta.json");
        if (!meta_in) throw DataError("missing " + (dir / "meta.json").string());
        json meta;
        try {
            meta = json::parse(meta_in);
            ds.name = meta.value("name", dir.filename().string());
            ds.frequency = meta.value("frequency", std::string{});
            if (meta.contains("period") && !meta["period"].is_null()) ds.period_override = meta["period"].get<int>();
            ds.train_end = meta.at("train_end").get<int>();
        } catch (const json::exception& e) {
            throw DataError((dir / "meta.json").string() + ": " + e.what());
        }
        if (ds.train_end <= 0 || ds.train_end > ds.length()) {
            throw DataError(ds.name + ": train_end " + std::to_string(ds.train_end) + " outside (0, " +
                            std::to_string(ds.length()) + "]");
        }
        ds.period = resolve_period(ds);
        archive.datasets.push_back(std::move(ds));
    }
    return archive;
}

void save_dataset_archive(const fs::path& root, const DatasetArchive& archive) {
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw DataError("cannot create " + root.string() + ": " + ec.message());
    for (const auto& ds : archive.datasets) {
        const fs::path dir = root / ds.name;
        fs::create_directories(dir, ec);
        if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
        std::ofstream csv(dir / "data.csv", std::ios::trunc);
        if (!csv) throw DataError("cannot write " + (dir / "data.csv").string());
        for (int v = 0; v < ds.variates(); ++v) {
            if (v) csv << ',';
            csv << (static_cast<std::size_t>(v) < ds.columns.size() ? ds.columns[static_cast<std::size_t>(v)]
                                                                     : "v" + std::to_string(v));
        }
        csv << '\n';
        char buf[40];
        for (int t = 0; t < ds.length(); ++t) {
            for (int v = 0; v < ds.variates(); ++v) {
                std::snprintf(buf, sizeof buf, "%.17g", ds.values(t, v));
                if (v) csv << ',';
                csv << buf;
            }
            csv << '\n';
        }
        json meta = {{"name", ds.name}, {"frequency", ds.frequency}, {"train_end", ds.train_end}};
        if (ds.period_override) meta["period"] = *ds.period_override;
        std::ofstream(dir / "meta.json", std::ios::trunc) << meta.dump(2) << '\n';
        if (!csv) throw DataError("failed writing " + dir.string());
    }
}

SynthSpec parse_synth_spec(const std::string& text) {
    SynthSpec spec;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("synth spec: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "seed") {
            spec.seed = value.get<std::uint64_t>();
        } else if (key == "series") {
            for (const auto& item : value) {
                SynthSeries s;
                for (const auto& [k, v] : item.items()) {
                    if (k == "name") s.name = v.get<std::string>();
                    else if (k == "generator") s.generator = v.get<std::string>();
                    else if (k == "frequency") s.frequency = v.get<std::string>();
                    else if (k == "length") s.length = v.get<int>();
                    else if (k == "variates") s.variates = v.get<int>();
                    else if (k == "period") s.period = v.get<int>();
                    else if (k == "amplitude") s.amplitude = v.get<double>();
                    else if (k == "phase") s.phase = v.get<double>();
                    else if (k == "noise_std") s.noise_std = v.get<double>();
                    else if (k == "slope") s.slope = v.get<double>();
                    else if (k == "ar_coef") s.ar_coef = v.get<double>();
                    else if (k == "spike_sigma") s.spike_sigma = v.get<double>();
                    else if (k == "spike_prob") s.spike_prob = v.get<double>();
                    else if (k == "train_fraction") s.train_fraction = v.get<double>();
                    else throw ConfigError("series." + k + ": unknown key");
                }
                if (s.name.empty()) s.name = "series_" + std::to_string(spec.series.size());
                spec.series.push_back(std::move(s));
            }
        } else {
            throw ConfigError(key + ": unknown key");
        }
    }
    return spec;
}

Dataset synthesize(const SynthSeries& s, std::uint64_t seed) {
    if (s.length < 2 || s.variates < 1 || s.period < 1) {
        throw ConfigError("series " + s.name + ": length, variates and period must be positive");
    }
    if (!(s.train_fraction > 0.0 && s.train_fraction <= 1.0)) {
        throw ConfigError("series " + s.name + ": train_fraction must lie in (0, 1]");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Dataset ds;
    ds.name = s.name;
    ds.frequency = s.frequency;
    ds.values.resize(s.length, s.variates);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int v = 0; v < s.variates; ++v) {
        ds.columns.push_back("v" + std::to_string(v));
        // Variates of one series differ by a fixed phase offset.
        const double phase = s.phase + two_pi * v / (s.variates + 1.0);
        double ar = 0.0;
        for (int t = 0; t < s.length; ++t) {
            const double season = s.amplitude * std::sin(two_pi * t / s.period + phase);
            double x = 0.0;
            if (s.generator == "sinusoid" || s.generator == "spike") {
                x = season + s.noise_std * noise(rng);
            } else if (s.generator == "trend_season") {
                x = season + s.slope * t + s.noise_std * noise(rng);
            } else if (s.generator == "ar1") {
                ar = s.ar_coef * ar + s.noise_std * noise(rng);
                x = ar;
            } else {
                throw ConfigError("series " + s.name + ": unknown generator '" + s.generator + "'");
            }
            ds.values(t, v) = x;
        }
        if (s.generator == "spike") {
            const double clean_std = std::sqrt(s.amplitude * s.amplitude / 2.0 + s.noise_std * s.noise_std);
            for (int t = 0; t < s.length; ++t) {
                if (unit(rng) < s.spike_prob) {
                    ds.values(t, v) += (unit(rng) < 0.5 ? -1.0 : 1.0) * s.spike_sigma * clean_std;
                }
            }
        }
    }
    ds.train_end = std::max(1, static_cast<int>(std::floor(s.train_fraction * s.length)));
    ds.period_override = s.period;
    ds.period = s.period;
    return ds;
}

DatasetArchive synthesize(const SynthSpec& spec) {
    DatasetArchive archive;
    for (std::size_t i = 0; i < spec.series.size(); ++i) {
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(i)};
        std::uint32_t words[2];
        seq.generate(words, words + 2);
        const std::uint64_t sub = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
        archive.datasets.push_back(synthesize(spec.series[i], sub));
    }
    std::sort(archive.datasets.begin(), archive.datasets.end(),
              [](const Dataset& a, const Dataset& b) { return a.name < b.name; });
    return archive;
}

}  // namespace viforecast
