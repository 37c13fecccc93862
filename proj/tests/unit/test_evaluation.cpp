#include <doctest.h>

#include <nlohmann/json.hpp>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "viforecast/evaluation.hpp"

using namespace viforecast;

namespace {

Matrix col(std::initializer_list<double> xs) {
    Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
    Eigen::Index i = 0;
    for (double x : xs) m(i++, 0) = x;
    return m;
}

Matrix random_matrix(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

ForecastSet single(const Matrix& m, int h = 1) { return ForecastSet(std::vector<Matrix>(static_cast<std::size_t>(h), m), QuantileSet(h)); }

// Returns the true continuation shifted by a constant on every head.
class OffsetOracle final : public Forecaster {
public:
    explicit OffsetOracle(double offset) : offset_(offset) {}
    ForecastSet forecast(const TimeSeriesSample& s) const override {
        return single((s.target.array() + offset_).matrix(), 3);
    }

private:
    double offset_;
};

Dataset sine_dataset(const std::string& name, int length, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, noise);
    Dataset d;
    d.name = name;
    d.frequency = "H";
    d.period = 24;
    d.columns = {"x", "y"};
    d.values.resize(length, 2);
    for (int t = 0; t < length; ++t) {
        d.values(t, 0) = 5 + std::sin(2 * std::numbers::pi * t / 24) + n(rng);
        d.values(t, 1) = -3 + std::cos(2 * std::numbers::pi * t / 24) + n(rng);
    }
    d.train_end = length - 120;
    return d;
}

}  // namespace

TEST_CASE("point error examples") {
    auto e = mse_mae(col({1, 2, 3}), col({1, 2, 3}));
    CHECK(e.mse == 0.0);
    CHECK(e.mae == 0.0);
    e = mse_mae(col({0}), col({2}));
    CHECK(e.mse == 4.0);
    CHECK(e.mae == 2.0);
    e = mse_mae(col({1.5, -0.5}), col({1, -1}));
    CHECK(e.mse == 0.25);
    CHECK(e.mae == 0.5);
    CHECK_THROWS_AS(mse_mae(col({1}), col({1, 2})), ShapeError);
}

TEST_CASE("seasonal naive examples") {
    CHECK(seasonal_naive(col({4, 5, 6}), 3, 1) == col({6, 6, 6}));
    CHECK(seasonal_naive(col({9, 1, 2, 3}), 6, 3) == col({1, 2, 3, 1, 2, 3}));
    Matrix periodic(40, 1);
    for (int t = 0; t < 40; ++t) periodic(t, 0) = t % 5;
    const Matrix f = seasonal_naive(periodic.topRows(30), 10, 5);
    CHECK(mse_mae(f, periodic.bottomRows(10)).mae == 0.0);
    CHECK_THROWS_AS(seasonal_naive(col({1, 2}), 3, 3), DataError);
}

TEST_CASE("MASE examples") {
    CHECK(mase(col({1, 2}), col({1, 2}), col({0, 1, 0, 1}), 1) == 0.0);
    CHECK(mase(col({0.5}), col({0.0}), col({0, 1, 0, 1}), 1) == 0.5);
    try {
        mase(col({0}), col({1}), col({1, 2, 1, 2, 1, 2}), 2);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()) == "MASE undefined: constant seasonal in-sample");
    }
}

TEST_CASE("CRPS examples") {
    CHECK(crps_from_quantiles(single(col({1, 2}), 9), col({1, 2})) == 0.0);

    const Matrix f = col({1.5, 0.0, 2.0});
    const Matrix y = col({1.0, 2.0, -1.0});
    const double normalized = (f - y).array().abs().sum() / y.array().abs().sum();
    CHECK(std::abs(crps_from_quantiles(single(f), y) - normalized) < 1e-12);
    CHECK(std::abs(crps_from_quantiles(single(f), y) - mse_mae(f, y).mae / y.array().abs().mean()) < 1e-12);

    // Nine zero heads against a unit target: (1/9) * sum 2 q_i.
    double hand = 0;
    for (int i = 1; i <= 9; ++i) hand += 2 * oracle::pinball(i / 10.0, 1.0, 0.0);
    hand /= 9;
    CHECK(hand == doctest::Approx(1.0));
    CHECK(crps_from_quantiles(single(col({0.0}), 9), col({1.0})) == doctest::Approx(1.0).epsilon(1e-12));

    // All-zero target falls back to the unnormalized sum.
    CHECK(crps_from_quantiles(single(col({1.0, -1.0})), col({0.0, 0.0})) == doctest::Approx(2.0));
    CHECK_THROWS_AS(crps_from_quantiles(single(col({1.0})), col({0.0, 0.0})), ShapeError);
}

TEST_CASE("normalized MAE aggregate") {
    CHECK(normalized_mae_aggregate({{"a", 1.0}, {"b", 4.0}}, {{"a", 2.0}, {"b", 2.0}}) == doctest::Approx(1.0));
    CHECK(normalized_mae_aggregate({{"a", 3.0}, {"b", 7.0}}, {{"a", 3.0}, {"b", 7.0}}) == 1.0);
    CHECK(normalized_mae_aggregate({{"a", 0.549}}, {{"a", 1.0}}) == doctest::Approx(0.549).epsilon(1e-12));
    CHECK_THROWS_AS(normalized_mae_aggregate({{"a", 1.0}}, {{"b", 1.0}}), DataError);
    CHECK_THROWS_AS(normalized_mae_aggregate({{"a", 1.0}}, {{"a", 0.0}}), DataError);
    CHECK_THROWS_AS(normalized_mae_aggregate({}, {}), DataError);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::map<std::string, double> m, n, scaled;
        std::vector<double> mv, nv;
        for (int d = 0; d < 6; ++d) {
            const std::string key(1, static_cast<char>('a' + d));
            m[key] = u(rng);
            n[key] = u(rng);
            scaled[key] = 2.5 * m[key];
            mv.push_back(m[key]);
            nv.push_back(n[key]);
        }
        const double g = normalized_mae_aggregate(m, n);
        REQUIRE(std::abs(g - oracle::geometric_mean_ratio(mv, nv)) < 1e-9);
        REQUIRE(normalized_mae_aggregate(scaled, n) == doctest::Approx(2.5 * g).epsilon(1e-12));
        std::reverse(mv.begin(), mv.end());
        std::reverse(nv.begin(), nv.end());
        REQUIRE(std::abs(g - oracle::geometric_mean_ratio(mv, nv)) < 1e-12);
    }
}

TEST_CASE("coverage") {
    const Matrix y = col({0.5, -1.0, 2.0, 0.0});
    CHECK(coverage(single(Matrix::Constant(4, 1, 1e300)), y)[0] == 1.0);
    CHECK(coverage(single(y), y)[0] == 1.0);
    CHECK(coverage(single(Matrix::Constant(4, 1, 0.0)), y)[0] == 0.5);

    std::mt19937_64 rng(10);
    std::normal_distribution<double> n;
    const int count = 100000;
    Matrix target(count, 1);
    for (int i = 0; i < count; ++i) target(i, 0) = n(rng);
    // Standard normal deciles.
    const double deciles[9] = {-1.2815515655446004, -0.8416212335729143, -0.5244005127080407,
                               -0.2533471031357997, 0.0, 0.2533471031357997,
                               0.5244005127080407, 0.8416212335729143, 1.2815515655446004};
    std::vector<Matrix> heads;
    for (double q : deciles) heads.push_back(Matrix::Constant(count, 1, q));
    const auto cov = coverage(ForecastSet(heads, QuantileSet(9)), target);
    for (int i = 0; i < 9; ++i) CHECK(std::abs(cov[static_cast<std::size_t>(i)] - (i + 1) / 10.0) < 0.01);
}

TEST_CASE("metrics agree with brute-force oracles") {
    std::mt19937_64 rng(500);
    std::uniform_int_distribution<int> dim(1, 10);
    std::uniform_int_distribution<int> season(1, 6);
    for (int trial = 0; trial < 500; ++trial) {
        const int t = dim(rng), m = dim(rng), s = season(rng);
        const Matrix f = random_matrix(t, m, rng);
        const Matrix y = random_matrix(t, m, rng);
        const Matrix ins = random_matrix(s + dim(rng) + 1, m, rng);
        const auto e = mse_mae(f, y);
        REQUIRE(std::abs(e.mse - oracle::mse(f, y)) < 1e-9);
        REQUIRE(std::abs(e.mae - oracle::mae(f, y)) < 1e-9);
        REQUIRE(std::abs(mase(f, y, ins, s) - oracle::mase(f, y, ins, s)) < 1e-9);
        const double c = std::exp(random_matrix(1, 1, rng)(0, 0));
        REQUIRE(mase(f * c, y * c, ins * c, s) == doctest::Approx(mase(f, y, ins, s)).epsilon(1e-12));

        std::vector<Matrix> heads;
        for (int i = 0; i < 9; ++i) heads.push_back(random_matrix(t, m, rng));
        const QuantileSet qs(9);
        REQUIRE(std::abs(crps_from_quantiles(ForecastSet(heads, qs), y) - oracle::crps(heads, qs.levels(), y)) < 1e-9);
    }
}

TEST_CASE("rolling windows start at the train split") {
    const Dataset d = sine_dataset("s", 400, 0.0, 1);
    const auto w = rolling_windows(d, {"s", 96, 24, 24});
    CHECK(w.size() == 5);
    CHECK(w[0].target == d.values.block(280, 0, 24, 2));
    CHECK(w[0].context == d.values.block(184, 0, 96, 2));
    CHECK(w[4].target == d.values.block(376, 0, 24, 2));
    CHECK(w[0].period == 24);
    CHECK_THROWS_AS(rolling_windows(d, {"s", 96, 24, 0}), ConfigError);
}

TEST_CASE("evaluate with stub forecasters") {
    DatasetArchive ar;
    ar.datasets.push_back(sine_dataset("b", 500, 0.1, 2));
    ar.datasets.push_back(sine_dataset("a", 500, 0.1, 3));
    const std::vector<ProtocolEntry> protocol{{"b", 96, 24, 24}, {"a", 96, 24, 24}};

    const auto perfect = evaluate(OffsetOracle(0.0), ar, protocol);
    REQUIRE(perfect.datasets.size() == 2);
    CHECK(perfect.datasets[0].dataset == "a");
    CHECK(perfect.datasets[1].dataset == "b");
    for (const auto& d : perfect.datasets) {
        CHECK(d.model.mse == 0.0);
        CHECK(d.model.mae == 0.0);
        CHECK(d.model.mase == 0.0);
        CHECK(d.model.crps == 0.0);
        CHECK(d.model.windows == 5);
        CHECK(d.naive.mae > 0.0);
        CHECK(d.naive.coverage.empty());
        for (double c : d.model.coverage) CHECK(c == 1.0);
    }
    CHECK(perfect.normalized_mae.value() == 0.0);

    const auto shifted = evaluate(OffsetOracle(0.25), ar, protocol);
    for (const auto& d : shifted.datasets) {
        CHECK(d.model.mae == doctest::Approx(0.25));
        CHECK(d.model.mse == doctest::Approx(0.0625));
    }

    const auto naive = evaluate(SeasonalNaiveForecaster(1), ar, protocol);
    for (const auto& d : naive.datasets) CHECK(d.model.mae == d.naive.mae);
    CHECK(naive.normalized_mae.value() == doctest::Approx(1.0));

    const auto j = nlohmann::json::parse(report_to_json(shifted));
    CHECK(j["datasets"]["a"]["coverage"].size() == 3);
    CHECK(j["datasets"]["a"]["seasonal_naive"]["coverage"].is_null());
    CHECK(j["aggregate"]["mae"].get<double>() == doctest::Approx(0.25));

    CHECK_THROWS_AS(evaluate(OffsetOracle(0.0), ar, {{"missing", 96, 24, 24}}), DataError);
}
