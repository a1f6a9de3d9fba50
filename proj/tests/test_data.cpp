#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "fcvae/data.hpp"
#include "fcvae/errors.hpp"

using namespace fcvae;
using namespace fcvae::data;

namespace {

TimeSeries series(std::vector<double> values, std::vector<int> labels = {}) {
    TimeSeries ts;
    ts.curve_id = "t";
    const auto n = values.size();
    for (std::size_t i = 0; i < n; ++i) ts.timestamps.push_back(static_cast<std::int64_t>(i) * 60);
    ts.values = std::move(values);
    ts.labels = labels.empty() ? std::vector<int>(n, 0) : std::move(labels);
    ts.missing.assign(n, false);
    return ts;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("fcvae_test_data_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("parse three rows") {
    const auto ts = parse_csv("timestamp,value,label\n0,1.5,0\n60,2.5,1\n120,-3,0\n", "c");
    REQUIRE(ts.size() == 3);
    CHECK(ts.curve_id == "c");
    CHECK(ts.timestamps == std::vector<std::int64_t>{0, 60, 120});
    CHECK(ts.values == std::vector<double>{1.5, 2.5, -3.0});
    CHECK(ts.labels == std::vector<int>{0, 1, 0});
    CHECK(std::none_of(ts.missing.begin(), ts.missing.end(), [](bool m) { return m; }));
}

TEST_CASE("empty value field marks the point missing") {
    const auto ts = parse_csv("timestamp,value,label\n0,1,0\n60,,0\n120,3,0\n", "c");
    CHECK(ts.missing[1]);
    CHECK_FALSE(ts.missing[0]);
    const auto filled = fill_missing(ts);
    CHECK(filled.values[1] == doctest::Approx(2.0));
    CHECK(filled.missing[1]);
}

TEST_CASE("unsorted rows parse like sorted ones") {
    const auto sorted = parse_csv("timestamp,value,label\n0,1,0\n60,2,1\n120,3,0\n", "c");
    const auto shuffled = parse_csv("timestamp,value,label\n120,3,0\n0,1,0\n60,2,1\n", "c");
    CHECK(shuffled.timestamps == sorted.timestamps);
    CHECK(shuffled.values == sorted.values);
    CHECK(shuffled.labels == sorted.labels);
}

TEST_CASE("malformed rows name the line") {
    try {
        parse_csv("timestamp,value,label\n0,1,0\n60,abc,0\n", "c");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_csv("timestamp,value,label\n0,1\n", "c"), ParseError);
    CHECK_THROWS_AS(parse_csv("timestamp,value,label\n0,1,2\n", "c"), ParseError);
    CHECK_THROWS_AS(parse_csv("timestamp,value,label\n0,1,0\n0,2,0\n", "c"), DataError);
}

TEST_CASE("csv round trip through disk") {
    const auto dir = temp_dir("roundtrip");
    auto ts = series({0.1, -2.0 / 3.0, 1e-17, 12345.678});
    ts.curve_id = "curve";
    ts.labels[2] = 1;
    write_csv(ts, dir / "curve.csv");
    const auto back = load_csv(dir / "curve.csv");
    CHECK(back.curve_id == "curve");
    CHECK(back.values == ts.values);
    CHECK(back.labels == ts.labels);
    CHECK(back.timestamps == ts.timestamps);
}

TEST_CASE("load_csv reports the file on parse errors") {
    const auto dir = temp_dir("bad");
    std::ofstream(dir / "bad.csv") << "timestamp,value,label\n0,x,0\n";
    try {
        load_csv(dir / "bad.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("bad.csv") != std::string::npos);
        CHECK(e.line() == 2);
    }
}

TEST_CASE("load_dataset reads csv files in order and rejects empty directories") {
    const auto dir = temp_dir("dataset");
    write_csv(series({1, 2}), dir / "b.csv");
    write_csv(series({3, 4}), dir / "a.csv");
    std::ofstream(dir / "notes.txt") << "ignored";
    const auto ds = load_dataset(dir);
    REQUIRE(ds.size() == 2);
    CHECK(ds[0].curve_id == "a");
    CHECK(ds[1].curve_id == "b");
    CHECK_THROWS_AS(load_dataset(temp_dir("empty")), DataError);
    CHECK_THROWS_AS(load_dataset(dir / "missing"), DataError);
}

TEST_CASE("standardize z-scores over normal points") {
    const auto [z, norm] = standardize(series({2, 4, 6}));
    CHECK(norm.mean == doctest::Approx(4.0));
    CHECK(norm.std == doctest::Approx(std::sqrt(8.0 / 3.0)));
    CHECK(z.values[0] == doctest::Approx(-1.2247).epsilon(1e-4));
    CHECK(z.values[1] == doctest::Approx(0.0));
    CHECK(z.values[2] == doctest::Approx(1.2247).epsilon(1e-4));
}

TEST_CASE("standardize clamps zero variance") {
    const auto [z, norm] = standardize(series({5, 5, 5}));
    CHECK(norm.std == 1.0);
    CHECK(z.values == std::vector<double>{0, 0, 0});
}

TEST_CASE("labelled points are excluded from the statistics but transformed") {
    const auto [z, norm] = standardize(series({1, 100, 3}, {0, 1, 0}));
    CHECK(norm.mean == doctest::Approx(2.0));
    CHECK(norm.std == doctest::Approx(1.0));
    CHECK(z.values[1] == doctest::Approx(98.0));
}

TEST_CASE("standardize inverts") {
    Rng rng(3);
    std::vector<double> v(50);
    for (auto& x : v) x = rng.uniform(-100, 100);
    const auto ts = series(v);
    const auto [z, norm] = standardize(ts);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(z.values[i] * norm.std + norm.mean - v[i]) < 1e-9);
    CHECK(apply_normalization(ts, norm).values == z.values);
    CHECK_THROWS_AS(standardize(series({1})), DataError);
}

TEST_CASE("fill_missing completes the grid") {
    TimeSeries ts;
    ts.curve_id = "g";
    ts.timestamps = {0, 1, 3};
    ts.values = {1, 2, 4};
    ts.labels = {0, 0, 0};
    ts.missing = {false, false, false};
    const auto f = fill_missing(ts);
    CHECK(f.timestamps == std::vector<std::int64_t>{0, 1, 2, 3});
    CHECK(f.missing == std::vector<bool>{false, false, true, false});
    CHECK(f.values[2] == doctest::Approx(3.0));
    CHECK(f.labels == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("fill_missing interpolates labelled points and fills edges") {
    auto ts = series({0, 7, 50, 9, 0});
    ts.missing[0] = true;
    ts.labels[2] = 1;
    ts.missing[4] = true;
    const auto f = fill_missing(ts);
    CHECK(f.values[0] == 7.0);
    CHECK(f.values[2] == doctest::Approx(8.0));
    CHECK(f.values[4] == 9.0);
    CHECK(f.labels[2] == 1);
}

TEST_CASE("fill_missing rejects series without normal points and off-grid stamps") {
    auto none = series({1, 2, 3}, {1, 1, 1});
    CHECK_THROWS_AS(fill_missing(none), DataError);
    TimeSeries off;
    off.curve_id = "o";
    off.timestamps = {0, 10, 20, 25, 40};
    off.values = {1, 2, 3, 4, 5};
    off.labels.assign(5, 0);
    off.missing.assign(5, false);
    CHECK_THROWS_AS(fill_missing(off), DataError);
}

TEST_CASE("fill_missing is idempotent") {
    Rng rng(11);
    TimeSeries ts;
    ts.curve_id = "i";
    std::int64_t t = 0;
    for (int i = 0; i < 200; ++i) {
        t += rng.bernoulli(0.1) ? 120 : 60;
        ts.timestamps.push_back(t);
        ts.values.push_back(rng.normal());
        ts.labels.push_back(rng.bernoulli(0.05) ? 1 : 0);
        ts.missing.push_back(rng.bernoulli(0.05));
    }
    const auto once = fill_missing(ts);
    const auto twice = fill_missing(once);
    CHECK(twice.timestamps == once.timestamps);
    CHECK(twice.values == once.values);
    CHECK(twice.missing == once.missing);
    CHECK(twice.labels == once.labels);
    for (std::size_t i = 1; i < once.size(); ++i) CHECK(once.timestamps[i] - once.timestamps[i - 1] == 60);
}

TEST_CASE("window counts and end indices") {
    const auto ts = series(std::vector<double>(10, 1.0));
    CHECK(make_windows(ts, 4, 1).size() == 7);
    const auto b = make_windows(ts, 4, 3);
    CHECK(b.last_index == std::vector<std::size_t>{3, 6, 9});
    CHECK(make_windows(ts, 11, 1).size() == 0);
}

TEST_CASE("windows copy values and alpha follows flags") {
    std::vector<double> v(10);
    std::iota(v.begin(), v.end(), 0.0);
    auto ts = series(v);
    ts.labels[4] = 1;
    ts.missing[6] = true;
    const auto b = make_windows(ts, 4, 1);
    const auto row = b.row(2);  // indices 2..5
    CHECK(std::vector<double>(row.begin(), row.end()) == std::vector<double>{2, 3, 4, 5});
    const auto a = b.alpha_row(2);
    CHECK(std::vector<double>(a.begin(), a.end()) == std::vector<double>{1, 1, 0, 1});
    const auto a4 = b.alpha_row(3);  // indices 3..6
    CHECK(std::vector<double>(a4.begin(), a4.end()) == std::vector<double>{1, 0, 1, 0});
}

TEST_CASE("inject_missing") {
    auto ts = series(std::vector<double>(10'003, 1.0));
    const auto batch = make_windows(ts, 4, 4);  // 2500 windows, 10000 points
    Rng r0(1);
    const auto same = inject_missing(batch, 0.0, r0);
    CHECK(same.values == batch.values);
    CHECK(same.alpha == batch.alpha);

    Rng r1(5);
    Rng r2(5);
    const auto a = inject_missing(batch, 0.1, r1);
    const auto b = inject_missing(batch, 0.1, r2);
    CHECK(a.values == b.values);
    CHECK(a.alpha == b.alpha);
    const auto zeros = std::count(a.values.begin(), a.values.end(), 0.0);
    const double frac = static_cast<double>(zeros) / static_cast<double>(a.values.size());
    CHECK(frac == doctest::Approx(0.1).epsilon(0.1));
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK((a.values[i] == 0.0) == (a.alpha[i] == 0.0));
    CHECK(std::all_of(batch.values.begin(), batch.values.end(), [](double x) { return x == 1.0; }));
}

TEST_CASE("pattern splice construction") {
    const std::vector<double> a(10, 1.0);
    const std::vector<double> b(10, 5.0);
    const auto out = augment_pattern_at(a, b, 4);
    CHECK(out.values == std::vector<double>{1, 1, 1, 1, 5, 5, 5, 5, 5, 5});
    CHECK(out.alpha == std::vector<double>{1, 1, 1, 1, 0, 0, 0, 0, 1, 1});
    for (std::size_t cut = 1; cut < 10; ++cut) {
        const auto o = augment_pattern_at(a, b, cut);
        const auto zeros = std::count(o.alpha.begin(), o.alpha.end(), 0.0);
        CHECK(zeros <= 4);
        CHECK(zeros >= 1);
        CHECK(o.alpha[cut] == 0.0);
    }
    CHECK_THROWS_AS(augment_pattern_at(a, b, 0), UsageError);
    CHECK_THROWS_AS(augment_pattern_at(a, b, 10), UsageError);
}

TEST_CASE("pattern splice is seed-deterministic") {
    std::vector<double> a(30), b(30);
    std::iota(a.begin(), a.end(), 0.0);
    std::iota(b.begin(), b.end(), 100.0);
    Rng r1(9), r2(9);
    const auto x = augment_pattern(a, b, r1);
    const auto y = augment_pattern(a, b, r2);
    CHECK(x.values == y.values);
    CHECK(x.alpha == y.alpha);
}

TEST_CASE("value mutation") {
    SUBCASE("single point on a zero window") {
        const std::vector<double> zero(10, 0.0);  // floor(0.05*10) = 0, so m = 1
        Rng rng(2);
        const auto out = augment_value(zero, rng);
        CHECK(std::count_if(out.values.begin(), out.values.end(), [](double v) { return v != 0.0; }) == 1);
        CHECK(std::accumulate(out.alpha.begin(), out.alpha.end(), 0.0) == 9.0);
        for (std::size_t i = 0; i < 10; ++i) CHECK((out.values[i] != 0.0) == (out.alpha[i] == 0.0));
    }
    SUBCASE("alpha sum is W - m with m bounded") {
        Rng rng(4);
        std::vector<double> w(120);
        for (auto& x : w) x = rng.normal();
        for (int trial = 0; trial < 100; ++trial) {
            const auto out = augment_value(w, rng);
            const auto m = 120 - static_cast<std::size_t>(std::accumulate(out.alpha.begin(), out.alpha.end(), 0.0));
            CHECK(m >= 1);
            CHECK(m <= 6);
            for (std::size_t i = 0; i < 120; ++i) {
                if (out.alpha[i] == 1.0) CHECK(out.values[i] == w[i]);
            }
        }
    }
    SUBCASE("mutated values usually leave the window range") {
        Rng rng(6);
        std::vector<double> w(120);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(0.3 * static_cast<double>(i)) * 0.5;  // range 1
        std::size_t outside = 0, total = 0;
        for (int trial = 0; trial < 500; ++trial) {
            const auto out = augment_value(w, rng);
            for (std::size_t i = 0; i < w.size(); ++i) {
                if (out.alpha[i] == 0.0) {
                    ++total;
                    if (std::abs(out.values[i]) > 0.5) ++outside;
                }
            }
        }
        // Uniform over mean +- 3 (range 1): 5/6 of the mass lies outside [-0.5, 0.5].
        CHECK(static_cast<double>(outside) / static_cast<double>(total) > 0.75);
    }
}

TEST_CASE("augment replaces the requested fraction") {
    std::vector<double> v(103);
    std::iota(v.begin(), v.end(), 0.0);
    auto a = make_windows(series(v), 4, 1, 0);  // 100 windows
    auto b = make_windows(series(v), 4, 1, 1);
    WindowBatch both = a;
    both.append(b);
    REQUIRE(a.size() == 100);

    Rng r0(1);
    const auto unchanged = augment(a, 0.0, r0);
    CHECK(unchanged.values == a.values);

    SUBCASE("two curves: half of each kind") {
        WindowBatch half = a;  // 50 from each curve
        half.values.resize(50 * 4);
        half.alpha.resize(50 * 4);
        half.last_index.resize(50);
        half.curve.resize(50);
        WindowBatch other = b;
        other.values.resize(50 * 4);
        other.alpha.resize(50 * 4);
        other.last_index.resize(50);
        other.curve.resize(50);
        half.append(other);
        Rng rng(3);
        AugmentStats stats;
        const auto out = augment(half, 0.2, rng, &stats);
        CHECK(stats.pattern == 10);
        CHECK(stats.value == 10);
        std::size_t changed = 0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const auto r = out.alpha_row(i);
            if (std::count(r.begin(), r.end(), 0.0) > 0) ++changed;
        }
        CHECK(changed == 20);
        CHECK(out.last_index == half.last_index);
        CHECK(out.curve == half.curve);
    }
    SUBCASE("single curve falls back to value mutation") {
        Rng rng(3);
        AugmentStats stats;
        augment(a, 0.2, rng, &stats);
        CHECK(stats.pattern == 0);
        CHECK(stats.value == 20);
    }
    SUBCASE("deterministic") {
        Rng r1(8), r2(8);
        const auto x = augment(both, 0.3, r1);
        const auto y = augment(both, 0.3, r2);
        CHECK(x.values == y.values);
        CHECK(x.alpha == y.alpha);
    }
}

TEST_CASE("preprocess config validation names the key") {
    PreprocessConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.window = 4;
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "window");
    }
    cfg = {};
    cfg.stride = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.missing_rate = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
