#include <doctest.h>

#include <numeric>

#include "grounder/core/error.hpp"
#include "grounder/description/prompt.hpp"
#include "grounder/evaluation/benchmark.hpp"
#include "grounder/evaluation/classes.hpp"
#include "grounder/evaluation/dataset.hpp"
#include "grounder/evaluation/definitions.hpp"
#include "grounder/evaluation/label_matching.hpp"
#include "grounder/evaluation/metrics.hpp"
#include "grounder/pipeline/synthetic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace grounder;
using namespace grounder::evaluation;
using grounder::testing::MockRig;
using grounder::testing::Rng;
using grounder::testing::TempDir;

TEST_CASE("minimal coco dataset") {
    const auto j = nlohmann::json::parse(R"({
        "images": [{"id": 1, "file_name": "a.png", "width": 10, "height": 10}],
        "categories": [{"id": 3, "name": "cup"}],
        "annotations": [{"id": 1, "image_id": 1, "category_id": 3, "bbox": [1, 2, 3, 4]}]})");
    const auto d = dataset_from_json(j, DatasetFormat::kCoco, "x/ann.json");
    CHECK(d.images.size() == 1);
    CHECK(d.categories.size() == 1);
    REQUIRE(d.images[0].annotations.size() == 1);
    CHECK(d.images[0].annotations[0].bbox == BBox{1, 2, 4, 6});
    CHECK(d.images[0].annotations[0].label == "cup");
    CHECK(d.root == "x");
    CHECK(dataset_from_json(to_coco_json(d), DatasetFormat::kCoco, "x/ann.json").images[0].annotations[0].bbox ==
          BBox{1, 2, 4, 6});

    auto zero = j;
    zero["annotations"][0]["bbox"] = {1, 2, 0, 4};
    CHECK_THROWS_AS(dataset_from_json(zero, DatasetFormat::kCoco, "ann.json"), Error);
    auto orphan = j;
    orphan["annotations"][0]["image_id"] = 9;
    CHECK_THROWS_AS(dataset_from_json(orphan, DatasetFormat::kCoco, "ann.json"), Error);
}

TEST_CASE("custom dataset scopes candidates per image") {
    nlohmann::json j{{"images", nlohmann::json::array()}};
    for (const int n : {3, 5}) {
        nlohmann::json anns = nlohmann::json::array();
        for (int k = 0; k < n; ++k) {
            anns.push_back({{"bbox", {k, k, k + 2, k + 2}}, {"description", "thing " + std::to_string(n) + "-" + std::to_string(k)}});
        }
        j["images"].push_back({{"file", "f.png"}, {"width", 20}, {"height", 20}, {"annotations", anns}});
    }
    const auto d = dataset_from_json(j, DatasetFormat::kCustom, "c.json");
    CHECK(d.image_labels(0).size() == 3);
    CHECK(d.image_labels(1).size() == 5);
    CHECK(d.categories.empty());

    j["images"][0]["annotations"][1]["bbox"] = {5, 0, 2, 3};
    try {
        (void)dataset_from_json(j, DatasetFormat::kCustom, "c.json");
        FAIL("expected a schema violation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kSchemaViolation);
        CHECK(std::string(e.what()).find("/images/0/annotations/1/bbox") != std::string::npos);
    }
    CHECK_THROWS_AS(load_dataset("/nonexistent/ann.json", DatasetFormat::kCoco), Error);
}

TEST_CASE("metrics on a perfect match") {
    std::vector<ScoredBox> dets{{1, "cup", {0, 0, 10, 10}, .9}, {1, "bottle", {20, 20, 30, 40}, .8}};
    std::vector<GroundTruthBox> truth{{1, "cup", {0, 0, 10, 10}}, {1, "bottle", {20, 20, 30, 40}}};
    const auto m = compute_metrics(dets, truth, true);
    CHECK(m.map == doctest::Approx(1.0));
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(coco_iou_thresholds().size() == 10);
}

TEST_CASE("metrics on a duplicate detection") {
    const auto m = compute_metrics({{1, "cup", {0, 0, 10, 10}, .9}, {1, "cup", {0, 0, 10, 10}, .8}}, {{1, "cup", {0, 0, 10, 10}}});
    CHECK(m.true_positives == 1);
    CHECK(m.false_positives == 1);
    CHECK(m.precision == 0.5);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("metrics with empty ground truth are flagged") {
    const auto m = compute_metrics({{1, "cup", {0, 0, 10, 10}, .9}}, {});
    CHECK(m.recall == 0.0);
    CHECK_FALSE(m.flags.empty());
}

TEST_CASE("toy three-image AP matches the PR integration oracle") {
    const std::vector<GroundTruthBox> truth{{1, "cup", {0, 0, 10, 10}}, {1, "cup", {20, 0, 30, 10}},
                                            {2, "cup", {0, 0, 20, 20}}, {3, "bottle", {5, 5, 15, 25}},
                                            {3, "cup", {40, 40, 50, 50}}};
    const std::vector<ScoredBox> dets{{1, "cup", {0, 0, 10, 11}, .95}, {1, "cup", {22, 1, 31, 10}, .6},
                                      {2, "cup", {1, 1, 20, 20}, .7},  {2, "cup", {30, 30, 40, 40}, .85},
                                      {3, "bottle", {5, 5, 15, 20}, .5}, {3, "cup", {0, 0, 5, 5}, .4}};
    const auto m = compute_metrics(dets, truth, true);
    const auto o = oracle::metrics(dets, truth, true);
    CHECK(m.map == doctest::Approx(o.map).epsilon(1e-12));
    CHECK(m.map50 == doctest::Approx(o.map50).epsilon(1e-12));
    for (const auto& [label, ap] : o.per_class) CHECK(m.per_class_ap.at(label) == doctest::Approx(ap).epsilon(1e-12));
    CHECK(m.threshold == o.threshold);
    CHECK(m.f1 == doctest::Approx(o.f1).epsilon(1e-12));
}

TEST_CASE("metrics equal the brute-force evaluator on random instances") {
    Rng rng(2024);
    const std::vector<std::string> labels{"a", "b", "c"};
    for (int trial = 0; trial < 400; ++trial) {
        std::vector<GroundTruthBox> truth;
        std::vector<ScoredBox> dets;
        const int images = static_cast<int>(rng.integer(1, 4));
        std::vector<double> confidences;
        for (int k = 1; k <= 24; ++k) confidences.push_back(k / 25.0);
        std::shuffle(confidences.begin(), confidences.end(), rng.engine());
        std::size_t next_conf = 0;
        for (int img = 0; img < images; ++img) {
            const auto boxes = rng.integer(0, 6);
            for (std::int64_t b = 0; b < boxes; ++b) {
                const double x = rng.integer(0, 30), y = rng.integer(0, 30);
                const BBox box{x, y, x + rng.integer(4, 12), y + rng.integer(4, 12)};
                const auto& label = rng.pick(labels);
                if (rng.coin(0.6)) truth.push_back({img, label, box});
                if (rng.coin(0.7) && next_conf < confidences.size()) {
                    const BBox jitter{box.x0 + rng.integer(-2, 2), box.y0 + rng.integer(-2, 2), box.x1 + rng.integer(-2, 2),
                                      box.y1 + rng.integer(-2, 2)};
                    dets.push_back({img, rng.coin(0.85) ? label : rng.pick(labels), jitter, confidences[next_conf++]});
                }
            }
        }
        const bool sweep = rng.coin(0.5);
        const auto m = compute_metrics(dets, truth, sweep);
        const auto o = oracle::metrics(dets, truth, sweep);
        CHECK(m.map == doctest::Approx(o.map).epsilon(1e-12));
        CHECK(m.map50 == doctest::Approx(o.map50).epsilon(1e-12));
        CHECK(m.precision == doctest::Approx(o.precision).epsilon(1e-12));
        CHECK(m.recall == doctest::Approx(o.recall).epsilon(1e-12));
        CHECK(m.f1 == doctest::Approx(o.f1).epsilon(1e-12));
        if (sweep) {
            CHECK(m.threshold == o.threshold);
            // The reported F1 dominates every distinct threshold.
            for (const auto& d : dets) {
                std::vector<ScoredBox> kept;
                for (const auto& e : dets) if (e.confidence >= d.confidence) kept.push_back(e);
                CHECK(compute_metrics(kept, truth).f1 <= m.f1 + 1e-12);
            }
        }
        if (m.precision + m.recall > 0) CHECK(m.f1 == doctest::Approx(2 * m.precision * m.recall / (m.precision + m.recall)));
    }
}

TEST_CASE("class list construction") {
    std::vector<ClassEntry> augmented{{"soap dispenser", "", ClassOrigin::kAugmented, "bottle"}, {"wall", "", ClassOrigin::kAugmented, std::nullopt}};
    const auto list = build_class_list({"bottle", "cup"}, augmented);
    CHECK(list.size() == 4);
    CHECK(list[0].origin == ClassOrigin::kNative);
    CHECK(list[2].rule_target == "bottle");
    CHECK_THROWS_AS(build_class_list({"cup", "cup"}, {}), Error);
    CHECK_THROWS_AS(build_class_list({"cup"}, {{"mug", "", ClassOrigin::kAugmented, "bottle"}}), Error);
    CHECK_THROWS_AS(build_class_list({"cup"}, {{"cup", "", ClassOrigin::kAugmented, std::nullopt}}), Error);
}

TEST_CASE("shipped augmented class file") {
    const auto classes = load_augmented_classes(default_augmented_classes_path());
    CHECK(classes.size() == 271);
    const auto rules = std::count_if(classes.begin(), classes.end(), [](const ClassEntry& c) { return c.rule_target.has_value(); });
    CHECK(rules == 11);
    const std::vector<std::string> coco{"person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck", "boat",
        "traffic light", "fire hydrant", "stop sign", "parking meter", "bench", "bird", "cat", "dog", "horse", "sheep", "cow",
        "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella", "handbag", "tie", "suitcase", "frisbee", "skis",
        "snowboard", "sports ball", "kite", "baseball bat", "baseball glove", "skateboard", "surfboard", "tennis racket",
        "bottle", "wine glass", "cup", "fork", "knife", "spoon", "bowl", "banana", "apple", "sandwich", "orange", "broccoli",
        "carrot", "hot dog", "pizza", "donut", "cake", "chair", "couch", "potted plant", "bed", "dining table", "toilet", "tv",
        "laptop", "mouse", "remote", "keyboard", "cell phone", "microwave", "oven", "toaster", "sink", "refrigerator", "book",
        "clock", "vase", "scissors", "teddy bear", "hair drier", "toothbrush"};
    REQUIRE(coco.size() == 80);
    CHECK(build_class_list(coco, classes).size() == 351);
    const auto soap = std::find_if(classes.begin(), classes.end(), [](const ClassEntry& c) { return c.name == "soap dispenser"; });
    REQUIRE(soap != classes.end());
    CHECK(soap->rule_target == "bottle");
    CHECK_THROWS_AS(augmented_classes_from_json(nlohmann::json::object()), Error);
}

TEST_CASE("definitions: passthrough, cache and fallback") {
    auto j = grounder::testing::default_fixture_json();
    j["chat"]["rules"].insert(j["chat"]["rules"].begin(),
                              nlohmann::json{{"contains", "object_name: bottle\n"}, {"response", "A bottle holds liquid."}});
    j["chat"]["rules"].insert(j["chat"]["rules"].begin(),
                              nlohmann::json{{"contains", "object_name: glitch\n"}, {"response", ""}});
    MockRig rig(gateway::mock::MockFixture::from_json(j));
    DefinitionGenerator gen(rig->chat(), description::PromptSet::shipped().define);

    auto out = gen.generate({{"bottle", std::nullopt}});
    CHECK(out[0].text == "A bottle holds liquid.");
    CHECK(gen.upstream_calls() == 1);
    out = gen.generate({{"bottle", std::nullopt}, {"bottle", std::nullopt}});
    CHECK(gen.upstream_calls() == 1);
    CHECK(out[1].text == "A bottle holds liquid.");

    out = gen.generate({{"cup", std::string("red cup")}, {"glitch", std::nullopt}, {"book", std::nullopt}});
    CHECK_FALSE(out[0].fallback);
    CHECK(out[0].text.find("red cup") != std::string::npos);
    CHECK(out[1].fallback);
    CHECK_FALSE(out[2].fallback);

    TempDir dir;
    gen.save_cache(dir.path() / "defs.json");
    DefinitionGenerator reloaded(rig->chat(), description::PromptSet::shipped().define);
    reloaded.load_cache(dir.path() / "defs.json");
    CHECK(reloaded.generate({{"bottle", std::nullopt}})[0].text == "A bottle holds liquid.");
    CHECK(reloaded.upstream_calls() == 0);
}

namespace {

nlohmann::json one_hot_codebook(const std::vector<std::pair<std::string, int>>& codes, int dim) {
    nlohmann::json cb = nlohmann::json::object();
    for (const auto& [text, code] : codes) {
        std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
        v[static_cast<std::size_t>(code)] = 1.0;
        cb[text] = v;
    }
    return cb;
}

}  // namespace

TEST_CASE("label matching with a one-hot codebook") {
    auto j = grounder::testing::default_fixture_json();
    j["embedder"] = {{"dim", 8},
                     {"codebook", one_hot_codebook({{"cat", 0}, {"small tabby cat", 1}, {"a cat is a feline", 2},
                                                    {"cat class definition", 3}, {"dog", 4}, {"dog class definition", 5}},
                                                   8)}};
    MockRig rig(gateway::mock::MockFixture::from_json(j));
    const std::vector<ClassEntry> classes{{"dog", "dog class definition", ClassOrigin::kNative, std::nullopt},
                                          {"cat", "cat class definition", ClassOrigin::kNative, std::nullopt}};
    const auto report = match_labels({{"cat", "small tabby cat", "a cat is a feline"}}, classes, rig->embedder());
    REQUIRE(report.outcomes.size() == 1);
    CHECK(report.outcomes[0].matched_class == "cat");
    CHECK(report.outcomes[0].score == doctest::Approx(1.0 / 6.0));
    CHECK(report.outcomes[0].evaluated_as == "cat");

    // An all-zero tie falls back to declaration order.
    const auto tie = match_labels({{"small tabby cat", "", ""}}, classes, rig->embedder());
    CHECK(tie.outcomes[0].matched_class == "dog");
}

TEST_CASE("label matching rules and discards") {
    auto j = grounder::testing::default_fixture_json();
    j["embedder"] = {{"dim", 4},
                     {"codebook", one_hot_codebook({{"soap dispenser", 0}, {"pump bottle of soap", 0}, {"bottle", 1},
                                                    {"wall", 2}, {"white painted wall", 2}, {"cup", 3}},
                                                   4)}};
    MockRig rig(gateway::mock::MockFixture::from_json(j));
    const auto classes = build_class_list({"bottle", "cup"}, {{"soap dispenser", "", ClassOrigin::kAugmented, "bottle"},
                                                              {"wall", "", ClassOrigin::kAugmented, std::nullopt}});
    const auto report = match_labels({{"soap dispenser", "pump bottle of soap", ""}, {"wall", "white painted wall", ""}, {"cup", "", ""}},
                                     classes, rig->embedder());
    REQUIRE(report.outcomes.size() == 3);
    CHECK(report.outcomes[0].matched_class == "soap dispenser");
    CHECK(report.outcomes[0].evaluated_as == "bottle");
    CHECK(report.outcomes[1].discarded());
    CHECK(report.outcomes[2].evaluated_as == "cup");
    CHECK(report.discarded() == 1);
    CHECK(report.to_json()[1]["evaluated_as"].is_null());
    CHECK_THROWS_AS(match_labels({{"cup", "", ""}}, {{"wall", "", ClassOrigin::kAugmented, std::nullopt}}, rig->embedder()), Error);
}

TEST_CASE("embedding failure aborts matching") {
    auto j = grounder::testing::default_fixture_json();
    j["faults"] = {{"embed", {{"always_fail", true}}}};
    MockRig rig(std::vector<gateway::mock::MockFixture>{gateway::mock::MockFixture::from_json(j)}, 0);
    try {
        (void)match_labels({{"cup", "", ""}}, build_class_list({"cup"}, {}), rig->embedder());
        FAIL("expected an embedding failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kEmbeddingFailure);
    }
}

namespace {

pipeline::PipelineConfig mock_config() {
    auto config = pipeline::default_config();
    config.max_concurrency = 4;
    return config;
}

Dataset hand_dataset(const std::filesystem::path& dir, const gateway::mock::MockFixture& fixture,
                     const std::vector<std::size_t>& counts) {
    Dataset d;
    d.format = DatasetFormat::kCoco;
    d.root = dir;
    for (std::size_t p = 0; p < fixture.palette.size(); ++p) {
        d.categories.push_back({static_cast<std::int64_t>(p + 1), fixture.palette[p].category});
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        std::vector<pipeline::SceneObject> objects;
        DatasetImage img{static_cast<std::int64_t>(i + 1), "img" + std::to_string(i) + ".png", 200, 100, {}};
        for (std::size_t k = 0; k < counts[i]; ++k) {
            const BBox box{5.0 + 32.0 * static_cast<double>(k), 20, 30.0 + 32.0 * static_cast<double>(k), 60};
            objects.push_back({k, box});
            img.annotations.push_back({box, fixture.palette[k].category});
        }
        pipeline::render_scene(200, 100, fixture, objects).save(dir / img.file);
        d.images.push_back(std::move(img));
    }
    return d;
}

}  // namespace

TEST_CASE("benchmark closes the loop on perfect mocks") {
    const auto fixture = gateway::mock::MockFixture::load(pipeline::default_fixture_path());
    TempDir dir;
    const auto dataset = hand_dataset(dir.path(), fixture, {2, 4, 6});
    MockRig rig(fixture);
    const auto config = mock_config();
    const auto result = run_benchmark(dataset, config, *rig.gateway);
    CHECK(result.failures == 0);
    CHECK(result.metrics.map == doctest::Approx(1.0));
    CHECK(result.mean_instances == doctest::Approx(4.0));
    CHECK(result.mean_times.description > 0.0);
    CHECK(result.mean_times.detection > 0.0);
    CHECK(result.mean_times.segmentation > 0.0);
    CHECK(result.table(true).find("1.00") != std::string::npos);

    write_benchmark_outputs(result, dir.path() / "out", true);
    CHECK(std::filesystem::exists(dir.path() / "out" / "report.json"));
}

TEST_CASE("benchmark flags empty images and partial coverage") {
    const auto fixture = gateway::mock::MockFixture::load(pipeline::default_fixture_path());
    TempDir dir;
    auto dataset = hand_dataset(dir.path(), fixture, {2, 2});
    dataset.images[1].annotations.clear();
    dataset.images.push_back({9, "missing.png", 10, 10, {}});
    MockRig rig(fixture);
    const auto result = run_benchmark(dataset, mock_config(), *rig.gateway);
    CHECK(result.failures == 1);
    CHECK(result.flags.size() == 2);
    CHECK(result.metrics.map == doctest::Approx(1.0));

    Dataset broken;
    broken.root = dir.path();
    broken.images.push_back({1, "missing.png", 10, 10, {}});
    try {
        (void)run_benchmark(broken, mock_config(), *rig.gateway);
        FAIL("expected a benchmark failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kBenchmarkFailed);
    }
}

TEST_CASE("custom benchmark matches against each image's own descriptions") {
    const auto fixture = gateway::mock::MockFixture::load(pipeline::default_fixture_path());
    TempDir dir;
    pipeline::SyntheticDatasetSpec spec;
    spec.images = 3;
    spec.format = DatasetFormat::kCustom;
    const auto dataset = pipeline::write_synthetic_dataset(dir.path(), fixture, spec);
    MockRig rig(fixture);
    const auto result = run_benchmark(dataset, mock_config(), *rig.gateway);
    for (std::size_t i = 0; i < result.images.size(); ++i) {
        const auto labels = dataset.image_labels(i);
        for (const auto& m : result.images[i].matches) {
            CHECK(std::find(labels.begin(), labels.end(), m["matched_class"].get<std::string>()) != labels.end());
        }
    }
    CHECK(result.metrics.map > 0.5);
}
