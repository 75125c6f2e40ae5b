#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "grounder/cli/commands.hpp"
#include "grounder/core/error.hpp"
#include "grounder/grounding/grounding.hpp"
#include "grounder/pipeline/synthetic.hpp"
#include "support.hpp"

using namespace grounder;
using namespace grounder::cli;
using grounder::testing::TempDir;

namespace {

const std::filesystem::path kGolden = std::filesystem::path(GROUNDER_TEST_FIXTURES) / "golden";

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<nlohmann::json> read_lines(const std::filesystem::path& path) {
    std::vector<nlohmann::json> out;
    std::ifstream in(path);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) out.push_back(nlohmann::json::parse(line));
    }
    return out;
}

/// Compares against a golden file; GROUNDER_UPDATE_GOLDEN=1 rewrites it instead.
void check_golden(const std::string& name, const std::string& actual) {
    if (std::getenv("GROUNDER_UPDATE_GOLDEN") != nullptr) {
        std::ofstream(kGolden / name) << actual;
        return;
    }
    CHECK(actual == slurp(kGolden / name));
}

std::filesystem::path scene(const std::filesystem::path& dir) {
    const auto fixture = gateway::mock::MockFixture::load(pipeline::default_fixture_path());
    const auto path = dir / "scene.png";
    pipeline::render_scene(160, 120, fixture,
                           {{0, BBox{10, 10, 40, 40}}, {1, BBox{60, 20, 80, 80}}, {2, BBox{100, 60, 150, 100}}, {3, BBox{110, 5, 150, 30}}})
        .save(path);
    return path;
}

/// A config whose only mock is `fixture`, written next to it under `dir`.
CommonOptions with_fixture(const std::filesystem::path& dir, const nlohmann::json& fixture) {
    std::ofstream(dir / "fixture.json") << fixture.dump();
    std::ofstream(dir / "config.json") << nlohmann::json{{"mocks", {{"default", "fixture.json"}}}}.dump();
    CommonOptions options;
    options.config = dir / "config.json";
    options.output_dir = dir / "out";
    options.stable_output = true;
    return options;
}

CommonOptions in_dir(const std::filesystem::path& dir) {
    CommonOptions options;
    options.output_dir = dir;
    options.stable_output = true;
    return options;
}

}  // namespace

TEST_CASE("describe matches the golden description") {
    TempDir dir;
    std::ostringstream out, err;
    REQUIRE(cmd_describe(in_dir(dir.path() / "out"), scene(dir.path()), out, err) == 0);
    CHECK(err.str().empty());
    check_golden("description.json", out.str());
    CHECK(slurp(dir.path() / "out" / "description.json") == out.str());
}

TEST_CASE("describe repairs prose-wrapped output to the same instances") {
    TempDir dir;
    auto fixture = grounder::testing::default_fixture_json();
    fixture["chat"]["describe_style"] = "prose";
    std::ostringstream out, err;
    REQUIRE(cmd_describe(with_fixture(dir.path(), fixture), scene(dir.path()), out, err) == 0);
    const auto golden = nlohmann::json::parse(slurp(kGolden / "description.json"));
    CHECK(nlohmann::json::parse(out.str())["instances"] == golden["instances"]);
}

TEST_CASE("describe failures exit nonzero with a machine-readable error") {
    TempDir dir;
    auto fixture = grounder::testing::default_fixture_json();
    fixture["chat"]["rules"] = {{{"contains", "Describe every unique object instance"}, {"response", "I see some shapes."}}};
    std::ostringstream out, err;
    CHECK(cmd_describe(with_fixture(dir.path(), fixture), scene(dir.path()), out, err) == exit_code(ErrorCode::kNoValidJson));
    const auto e = nlohmann::json::parse(err.str());
    CHECK(e["error"] == std::string(to_string(ErrorCode::kNoValidJson)));
    CHECK(out.str().empty());

    fixture["chat"]["rules"] = {{{"contains", "Describe every unique object instance"}, {"response", "[]"}}};
    std::ostringstream out2, err2;
    CHECK(cmd_describe(with_fixture(dir.path(), fixture), scene(dir.path()), out2, err2) ==
          exit_code(ErrorCode::kEmptyDescription));

    std::ostringstream out3, err3;
    CHECK(cmd_describe(in_dir(dir.path()), dir.path() / "absent.png", out3, err3) != 0);
}

TEST_CASE("ground matches the golden result and obeys the budget") {
    TempDir dir;
    const auto image = scene(dir.path());
    const auto description = kGolden / "description.json";
    std::ostringstream out, err;
    REQUIRE(cmd_ground(in_dir(dir.path() / "a"), image, description, true, out, err) == 0);
    check_golden("grounding.json", out.str());
    CHECK(std::filesystem::exists(dir.path() / "a" / "grounding.png"));

    // Distractor boxes give every prompt spare candidates for the second pass.
    auto fixture = grounder::testing::default_fixture_json();
    fixture["detector"]["distractor_score"] = 0.3;
    const auto n = nlohmann::json::parse(slurp(description))["instances"].size();
    for (const double odf : {1.0, 1.5}) {
        auto options = with_fixture(dir.path(), fixture);
        options.odf = odf;
        std::ostringstream o, e;
        REQUIRE(cmd_ground(options, image, description, false, o, e) == 0);
        const auto result = nlohmann::json::parse(o.str());
        CHECK(result["assignments"].size() == grounding::budget(odf, n));
    }
}

TEST_CASE("ground without a description file is a usage error") {
    TempDir dir;
    std::ostringstream out, err;
    const int code = cmd_ground(in_dir(dir.path()), scene(dir.path()), dir.path() / "missing.json", false, out, err);
    CHECK(code == exit_code(ErrorCode::kInvalidArgument));
    CHECK(code != exit_code(ErrorCode::kDetectorFailure));
    CHECK(nlohmann::json::parse(err.str())["error"] == std::string(to_string(ErrorCode::kInvalidArgument)));
}

TEST_CASE("track keeps one id for a translating box") {
    TempDir dir;
    const auto fixture = gateway::mock::MockFixture::load(pipeline::default_fixture_path());
    pipeline::SequenceSpec spec;
    spec.frames = 10;
    spec.objects = {{0, BBox{10, 40, 40, 70}, 2.0, 0.0, 0, -1}};
    pipeline::write_sequence(dir.path() / "frames", fixture, spec);
    std::ostringstream out, err;
    REQUIRE(cmd_track(in_dir(dir.path() / "out"), TrackOptions{dir.path() / "frames", 0, std::nullopt, true}, out, err) == 0);
    const auto snapshots = read_lines(dir.path() / "out" / "tracks.jsonl");
    REQUIRE(snapshots.size() == 10);
    for (std::size_t f = 0; f < snapshots.size(); ++f) {
        REQUIRE(snapshots[f]["tracks"].size() == 1);
        CHECK(snapshots[f]["tracks"][0]["id"] == snapshots[0]["tracks"][0]["id"]);
        CHECK(snapshots[f]["tracks"][0]["bbox"][0].get<double>() == doctest::Approx(10.0 + 2.0 * static_cast<double>(f)));
    }
    CHECK(std::filesystem::exists(dir.path() / "out" / "overlays" / "frame_0009.png"));
    CHECK(nlohmann::json::parse(out.str())["updates"] == 1);
}

TEST_CASE("track with an update interval admits a late object once") {
    TempDir dir;
    const auto fixture = gateway::mock::MockFixture::load(pipeline::default_fixture_path());
    pipeline::SequenceSpec spec;
    spec.frames = 11;
    spec.objects = {{0, BBox{10, 10, 40, 40}, 1.0, 0.0, 0, -1}, {1, BBox{100, 60, 130, 100}, 0.0, -1.0, 6, -1}};
    pipeline::write_sequence(dir.path() / "frames", fixture, spec);
    for (const char* run : {"a", "b"}) {
        std::ostringstream out, err;
        REQUIRE(cmd_track(in_dir(dir.path() / run), TrackOptions{dir.path() / "frames", 5, std::nullopt, false}, out, err) == 0);
    }
    const auto updates = read_lines(dir.path() / "a" / "updates.jsonl");
    REQUIRE(updates.size() == 3);
    CHECK(updates[0]["admitted"].size() == 1);
    CHECK(updates[1]["frame"] == 5);
    CHECK(updates[1]["admitted"].empty());
    CHECK(updates[1]["suppressed"].size() == 1);
    CHECK(updates[2]["frame"] == 10);
    REQUIRE(updates[2]["admitted"].size() == 1);
    CHECK(updates[2]["admitted"][0]["object_name"] == "bottle");
    const auto snapshots = read_lines(dir.path() / "a" / "tracks.jsonl");
    CHECK(snapshots[9]["tracks"].size() == 1);
    CHECK(snapshots[10]["tracks"].size() == 2);

    CHECK(slurp(dir.path() / "a" / "tracks.jsonl") == slurp(dir.path() / "b" / "tracks.jsonl"));
    CHECK(slurp(dir.path() / "a" / "updates.jsonl") == slurp(dir.path() / "b" / "updates.jsonl"));
}

TEST_CASE("track consumes the trigger file and skips broken frames") {
    TempDir dir;
    const auto fixture = gateway::mock::MockFixture::load(pipeline::default_fixture_path());
    pipeline::SequenceSpec spec;
    spec.frames = 4;
    spec.objects = {{0, BBox{10, 10, 40, 40}, 1.0, 0.0, 0, -1}};
    pipeline::write_sequence(dir.path() / "frames", fixture, spec);
    grounder::testing::write_text(dir.path() / "frames" / "frame_0002b.png", "not an image");
    grounder::testing::write_text(dir.path() / "update.now", "");
    std::ostringstream out, err;
    REQUIRE(cmd_track(in_dir(dir.path() / "out"), TrackOptions{dir.path() / "frames", 0, dir.path() / "update.now", false},
                      out, err) == 0);
    CHECK_FALSE(std::filesystem::exists(dir.path() / "update.now"));
    const auto summary = nlohmann::json::parse(out.str());
    CHECK(summary["frames"] == 4);
    CHECK(summary["skipped"] == 1);

    std::ostringstream o, e;
    CHECK(cmd_track(in_dir(dir.path() / "out"), TrackOptions{dir.path() / "nothing", 0, std::nullopt, false}, o, e) ==
          exit_code(ErrorCode::kInvalidArgument));
}

TEST_CASE("eval prints the table and writes reports") {
    TempDir dir;
    std::ostringstream synth_out, synth_err;
    REQUIRE(cmd_synth_dataset(dir.path() / "data", 3, 5, "coco", pipeline::default_fixture_path(), synth_out, synth_err) == 0);
    std::ostringstream out, err;
    REQUIRE(cmd_eval(in_dir(dir.path() / "out"), dir.path() / "data" / "annotations.json", "coco", out, err) == 0);
    std::istringstream table(out.str());
    std::string header, row;
    std::getline(table, header);
    std::getline(table, row);
    CHECK(header.find("mAP") != std::string::npos);
    CHECK(row.find("1.00") != std::string::npos);
    const auto report = grounder::testing::read_json(dir.path() / "out" / "report.json");
    CHECK(report["metrics"]["mAP"].get<double>() == doctest::Approx(1.0));
    CHECK_FALSE(report.contains("mean_times_ms"));
    for (const char* f : {"report.txt", "timings.csv", "matches.jsonl"}) CHECK(std::filesystem::exists(dir.path() / "out" / f));

    std::ostringstream o, e;
    CHECK(cmd_eval(in_dir(dir.path() / "out"), dir.path() / "data" / "annotations.json", "yaml", o, e) ==
          exit_code(ErrorCode::kInvalidArgument));
}

TEST_CASE("eval on the noisy corpus shows the validation tradeoff") {
    TempDir dir;
    const auto noisy = std::filesystem::path(GROUNDER_DATA_DIR) / "mocks" / "noisy_fixture.json";
    std::ostringstream s_out, s_err;
    REQUIRE(cmd_synth_dataset(dir.path() / "data", 10, 1, "coco", noisy, s_out, s_err) == 0);
    nlohmann::json reports[2];
    for (const bool validate : {false, true}) {
        auto options = with_fixture(dir.path(), grounder::testing::read_json(noisy));
        options.validate = validate;
        options.output_dir = dir.path() / (validate ? "on" : "off");
        std::ostringstream out, err;
        REQUIRE(cmd_eval(options, dir.path() / "data" / "annotations.json", "coco", out, err) == 0);
        reports[validate] = grounder::testing::read_json(*options.output_dir / "report.json");
    }
    CHECK(reports[1]["metrics"]["precision"].get<double>() > reports[0]["metrics"]["precision"].get<double>());
    CHECK(reports[1]["metrics"]["recall"].get<double>() < reports[0]["metrics"]["recall"].get<double>());
}

TEST_CASE("serve-mocks reports its port and stops") {
    std::atomic<bool> stop{false};
    std::ostringstream out, err;
    CHECK(cmd_serve_mocks(pipeline::default_fixture_path(), "127.0.0.1", 0, 100, stop, out, err) == 0);
    const auto line = nlohmann::json::parse(out.str().substr(0, out.str().find('\n')));
    CHECK(line["port"].get<int>() > 0);

    std::ostringstream o, e;
    CHECK(cmd_serve_mocks("/nonexistent/fixture.json", "127.0.0.1", 0, 100, stop, o, e) != 0);
}

TEST_CASE("config errors map to the config exit code") {
    TempDir dir;
    CommonOptions options = in_dir(dir.path());
    options.odf = 0.5;
    std::ostringstream out, err;
    CHECK(cmd_describe(options, scene(dir.path()), out, err) == exit_code(ErrorCode::kConfig));
}
