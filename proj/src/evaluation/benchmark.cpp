#include "grounder/evaluation/benchmark.hpp"

#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "grounder/core/error.hpp"
#include "grounder/core/parallel.hpp"
#include "grounder/evaluation/classes.hpp"
#include "grounder/evaluation/definitions.hpp"
#include "grounder/tracking/track_registry.hpp"

namespace grounder::evaluation {

namespace {

std::vector<DefinitionResult> class_definitions(DefinitionGenerator& generator, std::vector<ClassEntry>& classes) {
    std::vector<DefinitionItem> items;
    std::vector<std::size_t> slots;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i].definition.empty()) {
            items.push_back({classes[i].name, std::nullopt});
            slots.push_back(i);
        }
    }
    auto results = generator.generate(items);
    for (std::size_t k = 0; k < slots.size(); ++k) {
        classes[slots[k]].definition = results[k].text;
    }
    return results;
}

ImageRecord process_image(const Dataset& dataset, std::size_t index, const std::vector<ClassEntry>* shared_classes,
                          pipeline::UpdatePipeline& update, gateway::Gateway& gateway, DefinitionGenerator& definitions,
                          const pipeline::PipelineConfig& config) {
    const auto& img = dataset.images[index];
    ImageRecord record;
    record.image_id = img.id;
    record.file = img.file.generic_string();
    record.annotations = img.annotations.size();

    const Image image = Image::load(dataset.root / img.file);
    tracking::TrackRegistry registry(gateway.tracker(), tracking::RegistryOptions{config.iou_gate, config.lost_patience});
    const auto outcome = update.run(image, registry);
    record.instances = outcome.description.instances.size();
    record.ungrounded = outcome.grounding.ungrounded.size();
    record.times = outcome.times;

    std::vector<const tracking::Track*> kept;
    for (const auto& t : registry.tracks()) {
        if (t.status == tracking::TrackStatus::kRejected) {
            ++record.rejected;
        } else if (t.instance) {
            kept.push_back(&t);
        }
    }
    std::vector<DefinitionItem> items;
    std::vector<DetectionText> texts;
    for (const auto* t : kept) {
        const auto description = t->instance->attributes.value("description", std::string());
        items.push_back({t->instance->object_name, description});
        texts.push_back({t->instance->object_name, description, ""});
    }
    const auto defs = definitions.generate(items);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        texts[i].definition = defs[i].text;
    }

    std::vector<ClassEntry> local;
    if (shared_classes == nullptr) {
        local = build_class_list(dataset.image_labels(index), {});
        class_definitions(definitions, local);
    }
    const auto& classes = shared_classes != nullptr ? *shared_classes : local;
    if (!texts.empty() && !classes.empty()) {
        const auto report = match_labels(texts, classes, gateway.embedder());
        for (const auto& o : report.outcomes) {
            const auto* t = kept[o.detection];
            nlohmann::json m{{"image_id", img.id},
                             {"track_id", t->id},
                             {"object_name", t->instance->object_name},
                             {"matched_class", o.matched_class},
                             {"score", o.score},
                             {"evaluated_as", o.evaluated_as ? nlohmann::json(*o.evaluated_as) : nlohmann::json(nullptr)}};
            record.matches.push_back(std::move(m));
            if (o.discarded()) {
                ++record.discarded;
                continue;
            }
            record.detections.push_back({img.id, *o.evaluated_as, t->bbox.value_or(t->seed_box), t->confidence});
        }
    }
    record.ok = true;
    return record;
}

std::string fixed(double v, int digits = 2) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

}  // namespace

BenchmarkResult run_benchmark(const Dataset& dataset, const pipeline::PipelineConfig& config, gateway::Gateway& gateway) {
    BenchmarkResult result;
    result.model = gateway.chat().defaults().model;
    result.odf = config.odf;
    result.validate = config.validate;

    pipeline::UpdatePipeline update(config, gateway);
    DefinitionGenerator definitions(gateway.chat(), update.prompts().define, config.max_concurrency);
    const bool persist = !config.cache_dir.empty();
    if (persist) {
        std::filesystem::create_directories(config.cache_dir);
        definitions.load_cache(config.cache_dir / "definitions.json");
        gateway.embedder().load_cache(config.cache_dir / "embeddings.json");
    }

    std::optional<std::vector<ClassEntry>> shared;
    if (dataset.format == DatasetFormat::kCoco) {
        std::vector<std::string> native;
        for (const auto& c : dataset.categories) {
            native.push_back(c.name);
        }
        std::vector<ClassEntry> augmented;
        if (config.augmented_classes) {
            augmented = load_augmented_classes(*config.augmented_classes);
        }
        shared = build_class_list(native, std::move(augmented));
        class_definitions(definitions, *shared);
    }

    std::vector<ImageRecord> records(dataset.images.size());
    bounded_parallel_for(dataset.images.size(), config.image_concurrency, [&](std::size_t i) {
        try {
            records[i] = process_image(dataset, i, shared ? &*shared : nullptr, update, gateway, definitions, config);
        } catch (const std::exception& e) {
            records[i].image_id = dataset.images[i].id;
            records[i].file = dataset.images[i].file.generic_string();
            records[i].annotations = dataset.images[i].annotations.size();
            records[i].error = e.what();
            spdlog::warn("image {} failed: {}", records[i].file, e.what());
        }
    });

    std::vector<ScoredBox> detections;
    std::vector<GroundTruthBox> truth;
    std::size_t ok = 0;
    double instance_sum = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.ok) {
            ++result.failures;
            continue;
        }
        ++ok;
        instance_sum += static_cast<double>(r.instances);
        result.mean_times += r.times;
        if (r.annotations == 0) {
            result.flags.push_back("image " + std::to_string(r.image_id) + " has no annotations; its detections are not scored");
            continue;
        }
        detections.insert(detections.end(), r.detections.begin(), r.detections.end());
        for (const auto& a : dataset.images[i].annotations) {
            truth.push_back({r.image_id, a.label, a.bbox});
        }
    }
    result.images = std::move(records);
    if (ok == 0 && !dataset.images.empty()) {
        throw Error(ErrorCode::kBenchmarkFailed, "every image failed; first error: " + result.images.front().error);
    }
    if (result.failures > 0) {
        result.flags.push_back("partial coverage: " + std::to_string(result.failures) + " of " +
                               std::to_string(dataset.images.size()) + " images failed");
    }
    if (ok > 0) {
        const double n = static_cast<double>(ok);
        result.mean_instances = instance_sum / n;
        result.mean_times.description /= n;
        result.mean_times.attribution /= n;
        result.mean_times.detection /= n;
        result.mean_times.segmentation /= n;
        result.mean_times.validation /= n;
    }
    result.metrics = compute_metrics(detections, truth, false);
    result.swept = compute_metrics(detections, truth, true);

    if (persist) {
        definitions.save_cache(config.cache_dir / "definitions.json");
        gateway.embedder().save_cache(config.cache_dir / "embeddings.json");
    }
    return result;
}

nlohmann::json BenchmarkResult::to_json(bool stable) const {
    nlohmann::json images_json = nlohmann::json::array();
    for (const auto& r : images) {
        nlohmann::json j{{"image_id", r.image_id},
                         {"file", r.file},
                         {"ok", r.ok},
                         {"instances", r.instances},
                         {"ungrounded", r.ungrounded},
                         {"annotations", r.annotations},
                         {"evaluated", r.detections.size()},
                         {"discarded", r.discarded},
                         {"rejected", r.rejected}};
        if (!r.error.empty()) {
            j["error"] = r.error;
        }
        if (!stable) {
            j["times_ms"] = {{"description", r.times.description},
                             {"attribution", r.times.attribution},
                             {"detection", r.times.detection},
                             {"segmentation", r.times.segmentation},
                             {"validation", r.times.validation}};
        }
        images_json.push_back(std::move(j));
    }
    nlohmann::json j{{"model", model},
                     {"odf", odf},
                     {"validate", validate},
                     {"metrics", metrics.to_json()},
                     {"swept", swept.to_json()},
                     {"mean_instances", mean_instances},
                     {"failures", failures},
                     {"flags", flags},
                     {"images", images_json}};
    if (!stable) {
        j["mean_times_ms"] = {{"description", mean_times.description},
                              {"attribution", mean_times.attribution},
                              {"detection", mean_times.detection},
                              {"segmentation", mean_times.segmentation},
                              {"validation", mean_times.validation},
                              {"total", mean_times.total()}};
    }
    return j;
}

std::string BenchmarkResult::table(bool stable) const {
    std::ostringstream out;
    out << std::left << std::setw(20) << "Model" << std::setw(8) << "Ins." << std::setw(10) << "Time[s]" << std::setw(7)
        << "mAP" << std::setw(7) << "P" << std::setw(7) << "R" << std::setw(7) << "F1" << "Thresh\n";
    out << std::setw(20) << (model.empty() ? "-" : model) << std::setw(8) << fixed(mean_instances, 1) << std::setw(10)
        << (stable ? std::string("-") : fixed(mean_times.total() / 1000.0, 2)) << std::setw(7) << fixed(metrics.map)
        << std::setw(7) << fixed(swept.precision) << std::setw(7) << fixed(swept.recall) << std::setw(7)
        << fixed(swept.f1) << (swept.threshold ? fixed(*swept.threshold) : std::string("-")) << "\n";
    out << "\nAll detections: P " << fixed(metrics.precision) << "  R " << fixed(metrics.recall) << "  F1 "
        << fixed(metrics.f1) << "  (TP " << metrics.true_positives << ", FP " << metrics.false_positives << ", FN "
        << metrics.false_negatives << ")\n";
    out << "ODF " << fixed(odf, 1) << ", validation " << (validate ? "on" : "off") << ", failed images " << failures
        << "\n";
    if (!stable) {
        out << "\nMean step times [ms]\n";
        out << std::setw(14) << "description" << std::setw(14) << "attribution" << std::setw(14) << "detection"
            << std::setw(14) << "segmentation" << std::setw(14) << "validation" << "total\n";
        out << std::setw(14) << fixed(mean_times.description, 1) << std::setw(14) << fixed(mean_times.attribution, 1)
            << std::setw(14) << fixed(mean_times.detection, 1) << std::setw(14) << fixed(mean_times.segmentation, 1)
            << std::setw(14) << fixed(mean_times.validation, 1) << fixed(mean_times.total(), 1) << "\n";
    }
    for (const auto& f : flags) {
        out << "note: " << f << "\n";
    }
    return out.str();
}

std::string BenchmarkResult::timing_csv() const {
    std::ostringstream out;
    out << "image_id,description_ms,attribution_ms,detection_ms,segmentation_ms,validation_ms,total_ms,instances\n";
    const auto row = [&](const std::string& id, const pipeline::StepTimes& t, double instances) {
        out << id << ',' << fixed(t.description, 3) << ',' << fixed(t.attribution, 3) << ',' << fixed(t.detection, 3)
            << ',' << fixed(t.segmentation, 3) << ',' << fixed(t.validation, 3) << ',' << fixed(t.total(), 3) << ','
            << fixed(instances, 2) << '\n';
    };
    for (const auto& r : images) {
        if (r.ok) {
            row(std::to_string(r.image_id), r.times, static_cast<double>(r.instances));
        }
    }
    row("mean", mean_times, mean_instances);
    return out.str();
}

void write_benchmark_outputs(const BenchmarkResult& result, const std::filesystem::path& dir, bool stable) {
    std::filesystem::create_directories(dir);
    const auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream out(dir / name);
        if (!out) {
            throw Error(ErrorCode::kIo, "cannot write " + (dir / name).string());
        }
        out << content;
    };
    write("report.json", result.to_json(stable).dump(2) + "\n");
    write("report.txt", result.table(stable));
    write("timings.csv", result.timing_csv());
    std::string matches;
    for (const auto& r : result.images) {
        for (const auto& m : r.matches) {
            matches += m.dump() + "\n";
        }
    }
    write("matches.jsonl", matches);
}

}  // namespace grounder::evaluation
