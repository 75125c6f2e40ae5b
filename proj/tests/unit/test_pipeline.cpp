#include <doctest.h>

#include "grounder/core/error.hpp"
#include "grounder/evaluation/benchmark.hpp"
#include "grounder/pipeline/config.hpp"
#include "grounder/pipeline/synthetic.hpp"
#include "grounder/pipeline/update.hpp"
#include "support.hpp"

using namespace grounder;
using namespace grounder::pipeline;
using grounder::testing::MockRig;
using grounder::testing::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("default config is valid and checks its invariants") {
    auto c = default_config();
    CHECK_NOTHROW(c.check());
    c.odf = 0.9;
    CHECK(code_of([&] { c.check(); }) == ErrorCode::kConfig);
    c = default_config();
    c.iou_gate = 1.0;
    CHECK(code_of([&] { c.check(); }) == ErrorCode::kConfig);
    c = default_config();
    c.services.detector.endpoints = {{"mock://elsewhere", 1}};
    CHECK(code_of([&] { c.check(); }) == ErrorCode::kConfig);
    c = default_config();
    c.schema_path = "/nonexistent/schema.json";
    CHECK(code_of([&] { c.check(); }) == ErrorCode::kConfig);
}

TEST_CASE("config file resolves relative paths") {
    TempDir dir;
    std::filesystem::copy_file(default_fixture_path(), dir.path() / "mock.json");
    grounder::testing::write_text(dir.path() / "run.json", R"({
        "mocks": {"local": "mock.json"},
        "services": {
            "chat": {"endpoints": [{"url": "mock://local", "weight": 2}], "model": "vlm-x", "timeout_ms": 1500, "max_retries": 1},
            "detector": {"endpoints": [{"url": "mock://local"}]},
            "tracker": {"endpoints": [{"url": "mock://local"}]},
            "embedder": {"endpoints": [{"url": "mock://local"}]}
        },
        "odf": 1.5, "validate": true, "task": "set the table", "output_dir": "out"})");
    const auto c = load_config(dir.path() / "run.json");
    CHECK_NOTHROW(c.check());
    CHECK(c.mocks.at("local") == dir.path() / "mock.json");
    CHECK(c.services.chat.endpoints[0].weight == 2);
    CHECK(c.services.chat.model == "vlm-x");
    CHECK(c.services.chat.pool.timeout == std::chrono::milliseconds(1500));
    CHECK(c.services.chat.pool.max_retries == 1);
    CHECK(c.odf == 1.5);
    CHECK(c.validate);
    CHECK(c.task == "set the table");
    CHECK(c.output_dir == dir.path() / "out");

    grounder::testing::write_text(dir.path() / "bad.json", "[1, 2]");
    CHECK(code_of([&] { (void)load_config(dir.path() / "bad.json"); }) == ErrorCode::kConfig);
    grounder::testing::write_text(dir.path() / "typed.json", R"({"odf": "high"})");
    CHECK(code_of([&] { (void)load_config(dir.path() / "typed.json"); }) == ErrorCode::kConfig);
    CHECK(code_of([&] { (void)load_config(dir.path() / "absent.json"); }) == ErrorCode::kConfig);
}

TEST_CASE("synthetic dataset is deterministic and loadable") {
    const auto fixture = gateway::mock::MockFixture::load(default_fixture_path());
    TempDir a, b;
    SyntheticDatasetSpec spec;
    spec.images = 4;
    spec.seed = 11;
    const auto da = write_synthetic_dataset(a.path(), fixture, spec);
    const auto db = write_synthetic_dataset(b.path(), fixture, spec);
    REQUIRE(da.images.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& img = da.images[i];
        CHECK(img.annotations.size() >= spec.min_objects);
        CHECK(img.annotations.size() <= spec.max_objects);
        REQUIRE(db.images[i].annotations.size() == img.annotations.size());
        for (std::size_t k = 0; k < img.annotations.size(); ++k) {
            CHECK(img.annotations[k].bbox == db.images[i].annotations[k].bbox);
            const auto& box = img.annotations[k].bbox;
            CHECK((box.valid() && box.x1 <= spec.width && box.y1 <= spec.height));
        }
        CHECK(std::filesystem::exists(a.path() / img.file));
    }
    const auto reloaded = evaluation::load_dataset(a.path() / "annotations.json", evaluation::DatasetFormat::kCoco);
    CHECK(reloaded.images.size() == 4);
}

TEST_CASE("default sequence: entrant appears at its entry frame") {
    const auto spec = default_sequence(30, 12);
    CHECK(objects_at(spec, 11).size() == 3);
    CHECK(objects_at(spec, 12).size() == 4);
    const auto round = SequenceSpec::from_json(spec.to_json());
    CHECK(round.to_json() == spec.to_json());

    const auto fixture = gateway::mock::MockFixture::load(default_fixture_path());
    TempDir dir;
    auto small = default_sequence(5, 2);
    write_sequence(dir.path(), fixture, small);
    CHECK(std::filesystem::exists(dir.path() / "frame_0004.png"));
    CHECK(grounder::testing::read_json(dir.path() / "truth.json")["frames"].size() == 5);
}

TEST_CASE("update pipeline grounds a scene into tracks") {
    const auto fixture = gateway::mock::MockFixture::load(default_fixture_path());
    MockRig rig(fixture);
    auto config = default_config();
    config.task = "pour a drink";
    config.validate = true;
    UpdatePipeline update(config, *rig.gateway);
    const Image image = render_scene(160, 120, fixture, {{0, BBox{5, 5, 30, 30}}, {1, BBox{50, 40, 70, 90}}, {2, BBox{100, 10, 140, 40}}});
    tracking::TrackRegistry registry(rig->tracker());
    const auto out = update.run(image, registry);
    CHECK(out.description.instances.size() == 3);
    CHECK(out.grounding.assignments.size() == 3);
    CHECK(out.grounding.ungrounded.empty());
    CHECK(out.admitted.admitted.size() == 3);
    CHECK(registry.tracks().size() == 3);
    REQUIRE(out.validation.has_value());
    for (const auto& v : out.validation->verdicts) CHECK(v.verdict == validation::Verdict::kValidated);
    CHECK(out.attribution.size() == 1);
    CHECK(out.times.description > 0.0);
    CHECK(out.times.attribution > 0.0);
    CHECK(out.times.detection > 0.0);
    CHECK(out.times.segmentation > 0.0);
    CHECK(out.times.validation > 0.0);

    // A second update on the unchanged scene admits nothing.
    const auto again = update.run(image, registry);
    CHECK(again.admitted.admitted.empty());
    CHECK(again.admitted.suppressed.size() == 3);
}

TEST_CASE("validation raises precision and lowers recall on the noisy corpus") {
    auto base = grounder::testing::read_json(std::filesystem::path(GROUNDER_DATA_DIR) / "mocks" / "noisy_fixture.json");
    for (int seed = 1; seed <= 3; ++seed) {
        base["seed"] = seed;
        const auto fixture = gateway::mock::MockFixture::from_json(base);
        TempDir dir;
        SyntheticDatasetSpec spec;
        spec.seed = static_cast<std::uint64_t>(seed);
        const auto dataset = write_synthetic_dataset(dir.path(), fixture, spec);
        evaluation::MetricsReport off, on;
        for (const bool validate : {false, true}) {
            MockRig rig(fixture);
            auto config = default_config();
            config.validate = validate;
            (validate ? on : off) = evaluation::run_benchmark(dataset, config, *rig.gateway).metrics;
        }
        CHECK(on.precision > off.precision);
        CHECK(on.recall < off.recall);
    }
}
