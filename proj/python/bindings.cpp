#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "viforecast/checkpoint.hpp"
#include "viforecast/config.hpp"
#include "viforecast/converter.hpp"
#include "viforecast/dataset.hpp"
#include "viforecast/evaluation.hpp"
#include "viforecast/filtering.hpp"
#include "viforecast/training.hpp"

namespace py = pybind11;
using namespace viforecast;

namespace {

py::dict forecast_dict(const ForecastSet& f) {
    py::dict d;
    d["levels"] = f.quantiles.levels();
    d["per_head"] = f.per_head;
    d["point"] = f.point();
    return d;
}

ForecastSet forecast_set(const std::vector<Matrix>& heads) {
    return ForecastSet(heads, QuantileSet(static_cast<int>(heads.size())));
}

/// A model configuration plus its parameters.
struct Model {
    ModelConfig config;
    Parameters params;

    py::dict forecast(const Matrix& context, int horizon, int period) const {
        TimeSeriesSample s;
        s.context = context;
        s.target = Matrix::Zero(horizon, context.cols());
        s.period = period;
        return forecast_dict(ModelForecaster(config, params).forecast(s));
    }
};

}  // namespace

PYBIND11_MODULE(_viforecast, m) {
    m.doc() = "Time-series forecasting through a masked-autoencoder vision backbone";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    // core
    m.def("lookup_period", &lookup_period, py::arg("frequency"));
    m.def("infer_periodicity", [](const std::string& freq, std::optional<Matrix> series) {
        return infer_periodicity(freq, series ? &*series : nullptr);
    }, py::arg("frequency"), py::arg("series") = py::none());
    m.def("quantile_levels", [](int h) { return QuantileSet(h).levels(); }, py::arg("h") = 9);

    // filtering
    py::class_<NormalizationStats>(m, "NormalizationStats")
        .def_readonly("mean", &NormalizationStats::mean)
        .def_readonly("std", &NormalizationStats::std)
        .def_readonly("r", &NormalizationStats::r)
        .def_readonly("eps", &NormalizationStats::eps);
    m.def("compute_stats", &compute_stats, py::arg("context"), py::arg("r") = 0.4, py::arg("eps") = 1e-6);
    m.def("normalize", &normalize, py::arg("x"), py::arg("stats"));
    m.def("denormalize", &denormalize, py::arg("x"), py::arg("stats"));
    m.def("pixel_bounds", [](std::array<double, 3> mean, std::array<double, 3> std) {
        const PixelBounds b = make_pixel_bounds(mean, std);
        return std::make_pair(b.lo, b.hi);
    }, py::arg("mean") = kImageNetMean, py::arg("std") = kImageNetStd);
    m.def("filter_sample", [](const Matrix& ctx, const Matrix& tgt) {
        return filter_sample(ctx, tgt, make_pixel_bounds(kImageNetMean, kImageNetStd));
    }, py::arg("norm_context"), py::arg("norm_target"));

    // converter
    m.def("fold_by_period", &fold_by_period, py::arg("series"), py::arg("period"));
    m.def("unfold_by_period", &unfold_by_period, py::arg("folded"), py::arg("length"));
    m.def("bilinear_resize", &bilinear_resize, py::arg("m"), py::arg("out_h"), py::arg("out_w"));
    m.def("assign_colors", [](int variates, const std::string& mode, std::optional<std::uint64_t> seed) {
        return assign_colors(variates, parse_color_mode(mode), seed).channels;
    }, py::arg("variates"), py::arg("mode") = "cyclic", py::arg("seed") = py::none());

    // training
    m.def("quantile_loss", [](const std::vector<Matrix>& preds, const Matrix& target, const std::vector<double>& levels) {
        const QuantileLossReport r = quantile_loss(preds, target, levels);
        return std::make_pair(r.total, r.per_level);
    }, py::arg("preds"), py::arg("target"), py::arg("levels"));
    m.def("lr_at_step", [](int step, double base_lr, int warmup, int total) {
        OptimizerConfig c;
        c.base_lr = base_lr;
        c.warmup_steps = warmup;
        c.total_steps = total;
        return lr_at_step(step, c);
    }, py::arg("step"), py::arg("base_lr") = 1e-4, py::arg("warmup_steps") = 10000, py::arg("total_steps") = 100000);

    // evaluation
    m.def("mse_mae", [](const Matrix& f, const Matrix& y) {
        const PointErrors e = mse_mae(f, y);
        return std::make_pair(e.mse, e.mae);
    }, py::arg("forecast"), py::arg("target"));
    m.def("seasonal_naive", &seasonal_naive, py::arg("context"), py::arg("horizon"), py::arg("season"));
    m.def("mase", &mase, py::arg("forecast"), py::arg("target"), py::arg("insample"), py::arg("season"));
    m.def("crps", [](const std::vector<Matrix>& heads, const Matrix& y) { return crps_from_quantiles(forecast_set(heads), y); },
          py::arg("heads"), py::arg("target"));
    m.def("coverage", [](const std::vector<Matrix>& heads, const Matrix& y) { return coverage(forecast_set(heads), y); },
          py::arg("heads"), py::arg("target"));
    m.def("normalized_mae", &normalized_mae_aggregate, py::arg("mae"), py::arg("naive_mae"));

    // model
    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_static("desk", &ModelConfig::desk)
        .def_static("full_size", &ModelConfig::full_size)
        .def_readwrite("width", &ModelConfig::width)
        .def_readwrite("patch", &ModelConfig::patch)
        .def_readwrite("enc_dim", &ModelConfig::enc_dim)
        .def_readwrite("enc_depth", &ModelConfig::enc_depth)
        .def_readwrite("enc_heads", &ModelConfig::enc_heads)
        .def_readwrite("dec_dim", &ModelConfig::dec_dim)
        .def_readwrite("dec_depth", &ModelConfig::dec_depth)
        .def_readwrite("dec_heads", &ModelConfig::dec_heads)
        .def_readwrite("mlp_ratio", &ModelConfig::mlp_ratio)
        .def_readwrite("heads", &ModelConfig::heads)
        .def_readwrite("seed", &ModelConfig::seed)
        .def("validate", &ModelConfig::validate)
        .def("parameter_count", [](const ModelConfig& c) { return parameter_count(c); })
        .def("__eq__", [](const ModelConfig& a, const ModelConfig& b) { return a == b; });

    py::class_<Model>(m, "Model")
        .def_static("random", [](const ModelConfig& c) {
            c.validate();
            return Model{c, init_random(c)};
        }, py::arg("config"))
        .def_static("load", [](const std::filesystem::path& p) {
            Checkpoint ck = load_checkpoint(p);
            return Model{ck.config, std::move(ck.params)};
        }, py::arg("path"))
        .def("save", [](const Model& mdl, const std::filesystem::path& p) { save_checkpoint(p, mdl.config, mdl.params); },
             py::arg("path"))
        .def_readonly("config", &Model::config)
        .def("tensor_names", [](const Model& mdl) {
            std::vector<std::string> names;
            for (const auto& t : tensors(mdl.params)) names.push_back(t.name);
            return names;
        })
        .def("forecast", &Model::forecast, py::arg("context"), py::arg("horizon"), py::arg("period"),
             "Quantile forecasts for a raw (L x M) context.");

    // data and training
    m.def("synthesize_archive", [](const std::string& spec_json, const std::filesystem::path& out) {
        save_dataset_archive(out, synthesize(parse_synth_spec(spec_json)));
    }, py::arg("spec_json"), py::arg("out_dir"));
    m.def("load_archive", [](const std::filesystem::path& root) {
        py::dict out;
        for (const auto& d : load_dataset_archive(root).datasets) {
            py::dict e;
            e["values"] = d.values;
            e["period"] = d.period;
            e["train_end"] = d.train_end;
            e["frequency"] = d.frequency;
            out[py::str(d.name)] = e;
        }
        return out;
    }, py::arg("root"));
    m.def("pretrain", [](const std::filesystem::path& archive, const std::string& config_json,
                         std::optional<Model> init, const std::function<void(int, double)>& on_log) {
        const RunConfig cfg = parse_run_config(config_json);
        Parameters params = init ? init->params : init_random(cfg.model);
        TrainOptions opts;
        opts.seed = cfg.seed;
        opts.log_every = cfg.log_every;
        if (on_log) {
            opts.on_log = [&](const TraceRow& r) {
                py::gil_scoped_acquire acquire;
                on_log(r.step, r.loss);
            };
        }
        TrainResult tr;
        {
            py::gil_scoped_release release;
            tr = train(load_dataset_archive(archive), cfg.model, cfg.optim, cfg.data, std::move(params), opts);
        }
        std::vector<double> losses;
        for (const auto& r : tr.trace) losses.push_back(r.loss);
        return std::make_pair(Model{cfg.model, std::move(tr.params)}, losses);
    }, py::arg("archive"), py::arg("config_json") = "{}", py::arg("init") = py::none(), py::arg("on_log") = nullptr);
}
