// viforecast command-line front end: synth, pretrain, forecast, evaluate.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>

#include "viforecast/checkpoint.hpp"
#include "viforecast/config.hpp"
#include "viforecast/dataset.hpp"
#include "viforecast/evaluation.hpp"
#include "viforecast/plotting.hpp"
#include "viforecast/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace viforecast;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    bool verbose = false;
};

struct SynthArgs {
    std::string spec;
    std::string out;
};

struct PretrainArgs {
    std::string archive;
    std::string out = "checkpoint.bin";
    std::string loss_csv;
    bool no_filter = false;
    bool no_color = false;
    std::optional<int> heads;
    std::optional<int> steps;
    std::string init;
};

struct ForecastArgs {
    std::string checkpoint;
    std::string archive;
    std::string dataset;
    int context = 0;
    int horizon = 0;
    std::optional<int> end;
    std::string out;
    std::string plot;
    std::string debug_images;
};

struct EvaluateArgs {
    std::string checkpoint;
    std::string archive;
    std::string protocol;
    std::string out;
};

std::string read_text(const fs::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(std::string("cannot read ") + what + " " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        write_text(path, text);
    }
}

int run_synth(const Globals& g, const SynthArgs& a) {
    SynthSpec spec = parse_synth_spec(read_text(a.spec, "synth spec"));
    if (g.seed) spec.seed = *g.seed;
    const DatasetArchive archive = synthesize(spec);
    try {
        save_dataset_archive(a.out, archive);
    } catch (const fs::filesystem_error& e) {
        throw DataError(std::string("cannot write archive: ") + e.what());
    }
    if (g.verbose) std::cerr << "wrote " << archive.datasets.size() << " datasets to " << a.out << '\n';
    return 0;
}

int run_pretrain(const Globals& g, const PretrainArgs& a) {
    RunConfig cfg = g.config.empty() ? RunConfig{} : load_run_config(g.config);
    if (!a.archive.empty()) cfg.archive = a.archive;
    if (cfg.archive.empty()) throw ConfigError("data.archive: no archive given (config or --archive)");
    if (a.no_filter) cfg.data.filter = false;
    if (a.no_color) cfg.data.grayscale = true;
    if (a.heads) cfg.model.heads = *a.heads;
    if (a.steps) {
        cfg.optim.total_steps = *a.steps;
        cfg.optim.warmup_steps = std::min(cfg.optim.warmup_steps, std::max(1, *a.steps));
    }
    if (!a.init.empty()) cfg.init = a.init;
    if (g.seed) {
        cfg.model.seed = *g.seed;
        cfg.seed = *g.seed + 1;
    }
    cfg.model.validate();
    cfg.optim.validate();

    const DatasetArchive archive = load_dataset_archive(cfg.archive);
    Parameters init;
    if (cfg.init == "random") {
        init = init_random(cfg.model);
    } else if (cfg.init.starts_with("pretrained:")) {
        init = init_from_pretrained(cfg.init.substr(11), cfg.model);
    } else {
        throw ConfigError("train.init: expected 'random' or 'pretrained:<path>', got '" + cfg.init + "'");
    }

    TrainOptions opts;
    opts.seed = cfg.seed;
    opts.log_every = cfg.log_every;
    if (g.verbose) {
        opts.on_log = [](const TraceRow& row) {
            std::fprintf(stderr, "step %6d  loss %.6f  reject %.3f\n", row.step, row.loss, row.reject_rate);
        };
    }
    const TrainResult result = train(archive, cfg.model, cfg.optim, cfg.data, std::move(init), opts);

    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_checkpoint(out, cfg.model, result.params);
    const fs::path csv = a.loss_csv.empty() ? fs::path(out).replace_extension(".loss.csv") : fs::path(a.loss_csv);
    write_text(csv, trace_to_csv(result.trace, QuantileSet(cfg.model.heads).levels()));
    if (g.verbose) std::cerr << "wrote " << out.string() << " and " << csv.string() << '\n';
    return 0;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
        json row = json::array();
        for (Eigen::Index v = 0; v < m.cols(); ++v) row.push_back(m(t, v));
        rows.push_back(std::move(row));
    }
    return rows;
}

int run_forecast(const Globals& g, const ForecastArgs& a) {
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    const DatasetArchive archive = load_dataset_archive(a.archive);
    const Dataset& ds = archive.find(a.dataset);
    const int end = a.end.value_or(ds.train_end + a.horizon);
    TimeSeriesSample window = split_window(ds.values, a.context, a.horizon, end);
    window.frequency = ds.frequency;
    window.period = ds.period;
    window.dataset_id = ds.name;

    const ModelForecaster model(ckpt.config, ckpt.params);
    Image input;
    std::vector<Image> recon;
    const ForecastSet fs = model.forecast(window, &input, &recon);

    json j;
    j["dataset"] = ds.name;
    j["end"] = end;
    j["levels"] = fs.quantiles.levels();
    j["per_head"] = json::array();
    for (const auto& head : fs.per_head) j["per_head"].push_back(matrix_json(head));
    j["point"] = matrix_json(fs.point());
    emit(a.out, j.dump(2) + "\n");

    if (!a.plot.empty()) write_png(a.plot, plot_forecast(window.context, fs));
    if (!a.debug_images.empty()) {
        const PixelBounds b = DataConfig{}.bounds();
        write_png(a.debug_images + "input.png", image_to_canvas(input, b.lo, b.hi));
        for (std::size_t i = 0; i < recon.size(); ++i) {
            write_png(a.debug_images + "head" + std::to_string(i) + ".png", image_to_canvas(recon[i], b.lo, b.hi));
        }
    }
    if (g.verbose) std::cerr << "forecast " << a.horizon << " steps of " << ds.name << " ending at " << end << '\n';
    return 0;
}

std::vector<ProtocolEntry> parse_protocol(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("protocol is not valid JSON: ") + e.what());
    }
    const json& list = j.is_object() && j.contains("windows") ? j["windows"] : j;
    if (!list.is_array()) throw ConfigError("protocol: expected an array of entries or {\"windows\": [...]}");
    std::vector<ProtocolEntry> out;
    for (const auto& e : list) {
        ProtocolEntry p;
        for (const auto& [key, v] : e.items()) {
            try {
                if (key == "dataset") p.dataset = v.get<std::string>();
                else if (key == "context_length") p.context_length = v.get<int>();
                else if (key == "horizon") p.horizon = v.get<int>();
                else if (key == "stride") p.stride = v.get<int>();
                else throw ConfigError("protocol." + key + ": unknown key");
            } catch (const json::exception&) {
                throw ConfigError("protocol." + key + ": wrong type");
            }
        }
        if (p.stride == 0) p.stride = p.horizon;
        out.push_back(p);
    }
    return out;
}

int run_evaluate(const Globals& g, const EvaluateArgs& a) {
    const std::vector<ProtocolEntry> protocol = parse_protocol(read_text(a.protocol, "protocol"));
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    const DatasetArchive archive = load_dataset_archive(a.archive);
    const ModelForecaster model(ckpt.config, ckpt.params);
    const EvaluationReport report = evaluate(model, archive, protocol);
    emit(a.out, report_to_json(report) + "\n");
    if (g.verbose) std::cerr << "evaluated " << report.datasets.size() << " datasets\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forecast time series with a masked-autoencoder vision backbone"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "Run configuration (JSON)");
    app.add_option("--seed", g.seed, "Root random seed");
    app.add_flag("-v,--verbose", g.verbose, "Progress on stderr");

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset archive");
    synth->add_option("--spec", sa.spec, "Generator spec (JSON)")->required();
    synth->add_option("--out", sa.out, "Archive directory")->required();

    PretrainArgs pa;
    auto* pretrain = app.add_subcommand("pretrain", "Train the backbone on an archive");
    pretrain->add_option("--archive", pa.archive, "Archive directory (overrides data.archive)");
    pretrain->add_option("--out", pa.out, "Checkpoint path")->capture_default_str();
    pretrain->add_option("--loss-csv", pa.loss_csv, "Loss trace path (default: <out>.loss.csv)");
    pretrain->add_flag("--no-filter", pa.no_filter, "Disable the pixel-range filter");
    pretrain->add_flag("--no-color", pa.no_color, "Grayscale rendering");
    pretrain->add_option("--heads", pa.heads, "Number of quantile heads (odd)");
    pretrain->add_option("--steps", pa.steps, "Override optim.total_steps");
    pretrain->add_option("--init", pa.init, "random | pretrained:<path>");

    ForecastArgs fa;
    auto* forecast = app.add_subcommand("forecast", "Forecast one window");
    forecast->add_option("--checkpoint", fa.checkpoint, "Checkpoint path")->required();
    forecast->add_option("--archive", fa.archive, "Archive directory")->required();
    forecast->add_option("--dataset", fa.dataset, "Dataset name")->required();
    forecast->add_option("--context", fa.context, "Context length L")->required();
    forecast->add_option("--horizon", fa.horizon, "Horizon T")->required();
    forecast->add_option("--end", fa.end, "Exclusive end row of the target (default: train_end + T)");
    forecast->add_option("--out", fa.out, "Forecast JSON path (default: stdout)");
    forecast->add_option("--plot", fa.plot, "Write a PNG plot");
    forecast->add_option("--debug-images", fa.debug_images, "Prefix for input/reconstruction PNGs");

    EvaluateArgs ea;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Rolling-window evaluation");
    evaluate_cmd->add_option("--checkpoint", ea.checkpoint, "Checkpoint path")->required();
    evaluate_cmd->add_option("--archive", ea.archive, "Archive directory")->required();
    evaluate_cmd->add_option("--protocol", ea.protocol, "Protocol JSON")->required();
    evaluate_cmd->add_option("--out", ea.out, "Report JSON path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::set<std::string> warned;
    set_warning_handler([&warned](const std::string& msg) {
        if (warned.insert(msg).second) std::cerr << "warning: " << msg << '\n';
    });
    try {
        if (synth->parsed()) return run_synth(g, sa);
        if (pretrain->parsed()) return run_pretrain(g, pa);
        if (forecast->parsed()) return run_forecast(g, fa);
        if (evaluate_cmd->parsed()) return run_evaluate(g, ea);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
