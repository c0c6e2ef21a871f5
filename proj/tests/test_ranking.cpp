#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sensorrank/sensorrank.hpp"

using namespace sensorrank;

namespace {

PriorityProfile profile_of(std::initializer_list<std::pair<const char*, int>> sliders, int scale = 100) {
    PriorityProfile p;
    p.scale = scale;
    for (auto [name, v] : sliders) p.entries[name] = {true, v, std::nullopt};
    return p;
}

std::vector<double> column(const NormalizedSpace& space, std::size_t d) {
    std::vector<double> out;
    for (std::size_t i = 0; i < space.size(); ++i) out.push_back(space.point(i)[d]);
    return out;
}

// Two sensors over accuracy (higher better) and cost (lower better) whose
// normalized coordinates are S1 = (1.0, 0.0) and S2 = (0.5, 1.0).
RegistrySnapshot two_sensor_snapshot() {
    PropertySchema schema({{"accuracy", Polarity::HigherIsBetter, Bounds{0.0, 1.0}, {}},
                           {"cost", Polarity::LowerIsBetter, Bounds{0.0, 10.0}, {}}});
    return oracle::make_snapshot(schema, {{"S1", "temperature", {1.0, 10.0}}, {"S2", "temperature", {0.5, 0.0}}});
}

}  // namespace

TEST(ComputeWeights, ProportionalToSliders) {
    auto w = compute_weights(profile_of({{"reliability", 60}, {"accuracy", 30}, {"cost", 10}}));
    // Hand normalization: each slider over the slider total of 100.
    EXPECT_DOUBLE_EQ(*w.weight("reliability"), 60.0 / 100.0);
    EXPECT_DOUBLE_EQ(*w.weight("accuracy"), 30.0 / 100.0);
    EXPECT_DOUBLE_EQ(*w.weight("cost"), 10.0 / 100.0);
    EXPECT_EQ(w.properties, (std::vector<std::string>{"accuracy", "cost", "reliability"}));
}

TEST(ComputeWeights, SingleAndAllZero) {
    EXPECT_EQ(compute_weights(profile_of({{"accuracy", 7}})).weights, std::vector<double>{1.0});
    EXPECT_EQ(compute_weights(profile_of({{"a", 0}, {"b", 0}})).weights, (std::vector<double>{0.5, 0.5}));
}

TEST(ComputeWeights, UncheckedExcludedAndErrors) {
    auto p = profile_of({{"accuracy", 40}, {"energy", 90}});
    p.entries["energy"].checked = false;
    auto w = compute_weights(p);
    EXPECT_EQ(w.properties, std::vector<std::string>{"accuracy"});
    EXPECT_FALSE(w.weight("energy"));

    p.entries["accuracy"].checked = false;
    EXPECT_THROW(compute_weights(p), NoCheckedProperties);
    EXPECT_THROW(compute_weights(profile_of({{"a", 101}})), InvalidArgument);
    EXPECT_THROW(compute_weights(profile_of({{"a", -1}})), InvalidArgument);
    auto bad_ideal = profile_of({{"a", 1}});
    bad_ideal.entries["a"].ideal = 1.5;
    EXPECT_THROW(compute_weights(bad_ideal), InvalidArgument);
}

TEST(ComputeWeights, SumToOneAndScaleInvariant) {
    std::mt19937_64 rng(3);
    auto schema = default_schema();
    for (int i = 0; i < 500; ++i) {
        auto p = oracle::random_profile(schema, rng);
        auto w = compute_weights(p);
        double sum = 0;
        for (double x : w.weights) sum += x;
        EXPECT_NEAR(sum, 1.0, 1e-12);

        auto scaled = p;
        int c = 1 + static_cast<int>(rng() % 9);
        scaled.scale *= c;
        for (auto& [name, e] : scaled.entries) e.slider *= c;
        EXPECT_EQ(compute_weights(scaled), w);
    }
}

TEST(Normalize, MinMaxEndpointsAndPolarity) {
    auto schema = oracle::unbounded_schema({{"accuracy", Polarity::HigherIsBetter}, {"cost", Polarity::LowerIsBetter}});
    auto snap = oracle::make_snapshot(schema, {{"a", "t", {10, 10}}, {"b", "t", {20, 20}}, {"c", "t", {30, 30}}});
    std::vector<std::string> dims = {"accuracy", "cost"};
    auto space = normalize(oracle::all(snap), schema, dims);
    EXPECT_EQ(column(space, 0), (std::vector<double>{0.0, 0.5, 1.0}));
    EXPECT_EQ(column(space, 1), (std::vector<double>{1.0, 0.5, 0.0}));
    EXPECT_EQ(space.ideal, (std::vector<double>{1.0, 1.0}));
    EXPECT_EQ(space.bounds_used[0], (Bounds{10, 30}));
}

TEST(Normalize, DegenerateMissingClampAndIdeal) {
    PropertySchema schema({{"same", Polarity::HigherIsBetter, std::nullopt, {}},
                           {"bounded", Polarity::HigherIsBetter, Bounds{0.0, 10.0}, {}},
                           {"sparse", Polarity::LowerIsBetter, std::nullopt, {}}});
    auto snap = oracle::make_snapshot(
        schema, {{"a", "t", {7, -5, 1}}, {"b", "t", {7, 5, kMissing}}, {"c", "t", {7, 15, 3}}});
    std::vector<std::string> dims = {"same", "bounded", "sparse"};
    auto space = normalize(oracle::all(snap), schema, dims, {{"bounded", 0.25}});
    EXPECT_EQ(column(space, 0), (std::vector<double>{0.5, 0.5, 0.5}));
    EXPECT_EQ(column(space, 1), (std::vector<double>{0.0, 0.5, 1.0}));
    EXPECT_EQ(column(space, 2), (std::vector<double>{1.0, 0.0, 0.0}));
    EXPECT_EQ(space.ideal, (std::vector<double>{1.0, 0.25, 1.0}));

    EXPECT_THROW(normalize({}, schema, dims), EmptyCandidates);
    std::vector<std::string> unknown = {"nope"};
    EXPECT_THROW(normalize(oracle::all(snap), schema, unknown), UnknownProperty);
    EXPECT_THROW(normalize(oracle::all(snap), schema, dims, {{"same", 2.0}}), InvalidArgument);
}

TEST(ComputeCpwi, Identities) {
    std::vector<double> x = {0.3, 0.9}, w = {0.5, 0.5};
    EXPECT_EQ(compute_cpwi(x, x, w), 0.0);
    EXPECT_EQ(compute_cpwi(std::vector<double>{0.0}, std::vector<double>{1.0}, std::vector<double>{1.0}), 1.0);
    EXPECT_THROW(compute_cpwi(x, std::vector<double>{1.0}, w), DimensionMismatch);
}

TEST(ComputeCpwi, TwoSensorExample) {
    std::vector<double> w = {0.75, 0.25}, ideal = {1.0, 1.0};
    // Direct evaluation: sqrt(0.25 * 1^2) and sqrt(0.75 * 0.5^2).
    EXPECT_EQ(compute_cpwi(std::vector<double>{1.0, 0.0}, ideal, w), 0.5);
    EXPECT_NEAR(compute_cpwi(std::vector<double>{0.5, 1.0}, ideal, w), 0.4330127018922193, 1e-15);
}

TEST(RankSensors, TwoSensorExampleOrder) {
    auto snap = two_sensor_snapshot();
    auto weights = compute_weights(profile_of({{"accuracy", 75}, {"cost", 25}}));
    auto space = normalize(oracle::all(snap), snap.schema(), weights.properties);
    auto ranked = rank_sensors(space, weights);
    EXPECT_EQ(ranked.ids(), (std::vector<std::string>{"S2", "S1"}));
    EXPECT_NEAR(ranked.entries[0].cpwi, 0.4330127018922193, 1e-15);
    EXPECT_EQ(ranked.entries[1].cpwi, 0.5);

    EXPECT_EQ(select_top_n(ranked, 1).ids(), std::vector<std::string>{"S2"});
}

TEST(RankSensors, TiesBreakById) {
    auto schema = oracle::unbounded_schema({{"a", Polarity::HigherIsBetter}});
    auto snap = oracle::make_snapshot(schema, {{"z", "t", {1}}, {"b", "t", {1}}, {"m", "t", {1}}});
    auto weights = compute_weights(profile_of({{"a", 1}}));
    auto ranked = rank_sensors(normalize(oracle::all(snap), schema, weights.properties), weights);
    EXPECT_EQ(ranked.ids(), (std::vector<std::string>{"b", "m", "z"}));
}

TEST(RankSensors, DimensionMismatch) {
    auto snap = two_sensor_snapshot();
    auto weights = compute_weights(profile_of({{"accuracy", 75}, {"cost", 25}}));
    std::vector<std::string> one = {"accuracy"};
    auto space = normalize(oracle::all(snap), snap.schema(), one);
    EXPECT_THROW(rank_sensors(space, weights), DimensionMismatch);
}

TEST(SelectTopN, Prefix) {
    RankedResult r;
    SensorRecord s[5];
    for (int i = 0; i < 5; ++i) r.entries.push_back({&s[i], i * 0.1});
    auto top = select_top_n(r, 3);
    ASSERT_EQ(top.size(), 3u);
    EXPECT_EQ(top.entries[2].sensor, &s[2]);
    r.entries.resize(2);
    EXPECT_EQ(select_top_n(r, 10).size(), 2u);
    EXPECT_THROW(select_top_n(r, 0), InvalidArgument);
}

// Property tests over random catalogs and profiles.

class RankingProperties : public ::testing::Test {
protected:
    std::mt19937_64 rng{2024};
    PropertySchema schema = synthetic_schema(8);

    RegistrySnapshot catalog(std::size_t n) {
        auto snap = generate_synthetic(n, schema, rng());
        // Knock out some values to exercise the missing-value rule.
        std::vector<SensorRecord> records(snap.sensors().begin(), snap.sensors().end());
        for (auto& r : records) {
            if (rng() % 10 == 0) r.values[rng() % r.values.size()] = kMissing;
        }
        return RegistrySnapshot(schema, std::move(records), 1);
    }

    RankedResult run(const std::vector<const SensorRecord*>& c, const PriorityProfile& p) {
        auto w = compute_weights(p);
        return rank_sensors(normalize(c, schema, w.properties, p.ideal_overrides()), w);
    }
};

TEST_F(RankingProperties, MatchesBruteForceOracle) {
    for (int i = 0; i < 30; ++i) {
        auto snap = catalog(150);
        auto profile = oracle::random_profile(schema, rng, true);
        auto got = run(oracle::all(snap), profile);
        auto want = oracle::rank(oracle::all(snap), schema, profile);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t k = 0; k < want.size(); ++k) {
            EXPECT_EQ(got.entries[k].id(), want[k].id);
            EXPECT_EQ(got.entries[k].cpwi, want[k].cpwi);
        }
    }
}

TEST_F(RankingProperties, ZeroAtIdealAndBoundedByOne) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        std::size_t dims = 1 + rng() % 12;
        std::vector<double> x(dims), y(dims), w(dims);
        double total = 0;
        for (std::size_t d = 0; d < dims; ++d) {
            x[d] = u(rng);
            y[d] = u(rng);
            w[d] = static_cast<double>(rng() % 100);
            total += w[d];
        }
        for (auto& v : w) v = total == 0 ? 1.0 / dims : v / total;
        EXPECT_NEAR(compute_cpwi(x, x, w), 0.0, 1e-12);
        double c = compute_cpwi(x, y, w);
        EXPECT_GE(c, 0.0);
        EXPECT_LE(c, 1.0 + 1e-12);
    }
}

TEST_F(RankingProperties, InputOrderInvariant) {
    for (int i = 0; i < 20; ++i) {
        auto snap = catalog(100);
        auto profile = oracle::random_profile(schema, rng);
        auto c = oracle::all(snap);
        auto base = run(c, profile).ids();
        std::shuffle(c.begin(), c.end(), rng);
        EXPECT_EQ(run(c, profile).ids(), base);
    }
}

TEST_F(RankingProperties, UncheckedPropertyIsIrrelevant) {
    for (int i = 0; i < 20; ++i) {
        auto snap = catalog(100);
        auto profile = oracle::random_profile(schema, rng);
        auto& victim = profile.entries.begin()->second;
        auto name = profile.entries.begin()->first;
        victim.checked = false;
        if (profile.checked().empty()) profile.entries.rbegin()->second.checked = true;
        auto base = run(oracle::all(snap), profile).ids();

        std::vector<SensorRecord> records(snap.sensors().begin(), snap.sensors().end());
        auto p = schema.index_of(name);
        for (auto& r : records) r.values[p] = static_cast<double>(rng() % 1000);
        RegistrySnapshot changed(schema, std::move(records), 2);
        EXPECT_EQ(run(oracle::all(changed), profile).ids(), base);
    }
}

TEST_F(RankingProperties, WorseCoordinateNeverImprovesCpwi) {
    // Declared bounds keep the normalization fixed while one value moves.
    for (int i = 0; i < 200; ++i) {
        auto snap = generate_synthetic(20, schema, rng());
        auto profile = oracle::random_profile(schema, rng);
        auto w = compute_weights(profile);
        auto before = index_sensors(normalize(oracle::all(snap), schema, w.properties), w);

        std::vector<SensorRecord> records(snap.sensors().begin(), snap.sensors().end());
        std::size_t who = rng() % records.size();
        std::size_t p = schema.index_of(w.properties[rng() % w.size()]);
        double delta = static_cast<double>(rng() % 100) / 100.0;
        // Move toward the worse end of the property.
        records[who].values[p] += schema[p].polarity == Polarity::HigherIsBetter ? -delta : delta;
        records[who].values[p] = std::clamp(records[who].values[p], 0.0, 1.0);
        RegistrySnapshot worse(schema, std::move(records), 2);
        auto after = index_sensors(normalize(oracle::all(worse), schema, w.properties), w);
        EXPECT_GE(after.entries[who].cpwi, before.entries[who].cpwi);
    }
}

TEST_F(RankingProperties, ConcentratedWeightSortsByThatDimension) {
    for (int i = 0; i < 20; ++i) {
        auto snap = catalog(80);
        std::string dim = schema[rng() % schema.size()].name;
        PriorityProfile p;
        p.entries[dim] = {true, 50, std::nullopt};
        std::vector<std::string> dims = {dim};
        auto space = normalize(oracle::all(snap), schema, dims);
        // Brute-force: sort by normalized coordinate descending, id ascending.
        std::vector<std::pair<double, std::string>> order;
        for (std::size_t k = 0; k < space.size(); ++k) order.emplace_back(space.point(k)[0], space.sensors[k]->id);
        std::sort(order.begin(), order.end(), [](auto& a, auto& b) {
            return a.first > b.first || (a.first == b.first && a.second < b.second);
        });
        std::vector<std::string> want;
        for (auto& [c, id] : order) want.push_back(id);
        EXPECT_EQ(run(oracle::all(snap), p).ids(), want);
    }
}

TEST_F(RankingProperties, AffineTransformOfRawValuesAndBounds) {
    for (int i = 0; i < 50; ++i) {
        auto snap = catalog(100);
        auto profile = oracle::random_profile(schema, rng);
        auto base = run(oracle::all(snap), profile).ids();

        std::size_t p = rng() % schema.size();
        double a = 0.01 + static_cast<double>(rng() % 10000) / 100.0;
        double b = static_cast<double>(static_cast<int>(rng() % 2001) - 1000);
        auto defs = schema.properties();
        // Unbounded properties normalize against the observed range, which
        // moves with the values.
        if (defs[p].bounds) defs[p].bounds = Bounds{a * defs[p].bounds->min + b, a * defs[p].bounds->max + b};
        PropertySchema moved_schema(defs);
        std::vector<SensorRecord> records(snap.sensors().begin(), snap.sensors().end());
        for (auto& r : records) {
            if (!is_missing(r.values[p])) r.values[p] = a * r.values[p] + b;
        }
        RegistrySnapshot moved(moved_schema, std::move(records), 2);
        auto w = compute_weights(profile);
        auto ranked = rank_sensors(normalize(oracle::all(moved), moved_schema, w.properties), w);
        EXPECT_EQ(ranked.ids(), base);
    }
}
