#include "grounder/gateway/mock_services.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "grounder/core/error.hpp"
#include "grounder/core/mask.hpp"
#include "grounder/core/text.hpp"

namespace grounder::gateway::mock {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::array<std::uint8_t, 3> parse_rgb(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) {
        throw Error(ErrorCode::kFixtureInvalid, "colours must be [r, g, b]");
    }
    std::array<std::uint8_t, 3> rgb{};
    for (std::size_t i = 0; i < 3; ++i) {
        const int v = j[i].get<int>();
        if (v < 0 || v > 255) {
            throw Error(ErrorCode::kFixtureInvalid, "colour channel outside [0, 255]");
        }
        rgb[i] = static_cast<std::uint8_t>(v);
    }
    return rgb;
}

std::uint32_t pack_bgr(const cv::Vec3b& px) {
    return (static_cast<std::uint32_t>(px[2]) << 16) | (static_cast<std::uint32_t>(px[1]) << 8) | px[0];
}

std::uint32_t pack_rgb(const std::array<std::uint8_t, 3>& rgb) {
    return (static_cast<std::uint32_t>(rgb[0]) << 16) | (static_cast<std::uint32_t>(rgb[1]) << 8) | rgb[2];
}

MockReply json_reply(const nlohmann::json& j, int status = 200) {
    return MockReply{status, j.dump(), std::chrono::milliseconds{0}};
}

MockReply error_reply(int status, const std::string& message) {
    return json_reply(nlohmann::json{{"error", message}}, status);
}

/// Request text and image payloads of a Chat Completions body.
struct ChatContent {
    std::string text;
    std::vector<std::string> images;
};

ChatContent read_chat(const nlohmann::json& body) {
    ChatContent out;
    for (const auto& m : body.at("messages")) {
        const auto& content = m.at("content");
        if (content.is_string()) {
            out.text += content.get<std::string>() + "\n";
            continue;
        }
        for (const auto& part : content) {
            const auto type = part.at("type").get<std::string>();
            if (type == "text") {
                out.text += part.at("text").get<std::string>() + "\n";
            } else if (type == "image_url") {
                const auto url = part.at("image_url").at("url").get<std::string>();
                const auto comma = url.find(',');
                out.images.push_back(comma == std::string::npos ? url : url.substr(comma + 1));
            }
        }
    }
    return out;
}

std::string line_value(const std::string& text, const std::string& prefix) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        const std::string line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        const std::string stripped = trim(line);
        if (stripped.rfind(prefix, 0) == 0) {
            return trim(stripped.substr(prefix.size()));
        }
        if (end == std::string::npos) {
            break;
        }
        pos = end + 1;
    }
    return {};
}

std::vector<std::string> tokens(const std::string& text) {
    static const std::set<std::string> stop{"a", "an", "the", "of", "is", "and", "with", "to", "in", "on",
                                            "for", "it", "its", "this", "that", "as", "by", "or", "kind"};
    std::vector<std::string> out;
    std::string current;
    for (const char ch : text + " ") {
        if (std::isalnum(static_cast<unsigned char>(ch)) != 0) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!current.empty()) {
            if (stop.count(current) == 0) {
                out.push_back(current);
            }
            current.clear();
        }
    }
    return out;
}

}  // namespace

double unit_hash(std::uint64_t seed, std::string_view key) {
    std::uint64_t state = fnv1a64(key, 0xcbf29ce484222325ULL ^ seed);
    return static_cast<double>(splitmix64(state) >> 11) / static_cast<double>(1ULL << 53);
}

std::vector<PalettePresence> find_palette(const Image& image, const std::vector<PaletteEntry>& palette) {
    std::unordered_map<std::uint32_t, std::size_t> lookup;
    for (std::size_t i = 0; i < palette.size(); ++i) {
        lookup.emplace(pack_rgb(palette[i].rgb), i);
    }
    struct Acc {
        std::size_t pixels = 0;
        int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    };
    std::vector<Acc> acc(palette.size());
    const cv::Mat& px = image.pixels();
    for (int r = 0; r < px.rows; ++r) {
        const auto* row = px.ptr<cv::Vec3b>(r);
        for (int c = 0; c < px.cols; ++c) {
            const auto it = lookup.find(pack_bgr(row[c]));
            if (it == lookup.end()) {
                continue;
            }
            auto& a = acc[it->second];
            if (a.pixels == 0) {
                a = Acc{0, c, r, c + 1, r + 1};
            }
            ++a.pixels;
            a.x0 = std::min(a.x0, c);
            a.y0 = std::min(a.y0, r);
            a.x1 = std::max(a.x1, c + 1);
            a.y1 = std::max(a.y1, r + 1);
        }
    }
    std::vector<PalettePresence> out;
    for (std::size_t i = 0; i < acc.size(); ++i) {
        if (acc[i].pixels > 0) {
            out.push_back(PalettePresence{i, acc[i].pixels, BBox{double(acc[i].x0), double(acc[i].y0), double(acc[i].x1), double(acc[i].y1)}});
        }
    }
    return out;
}

MockFixture MockFixture::from_json(const nlohmann::json& j) {
    MockFixture f;
    try {
        f.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("background")) {
            f.background = parse_rgb(j["background"]);
        }
        for (const auto& p : j.value("palette", nlohmann::json::array())) {
            PaletteEntry e;
            e.rgb = parse_rgb(p.at("color"));
            e.object_name = p.at("object_name").get<std::string>();
            e.description = p.at("description").get<std::string>();
            e.category = p.value("category", e.object_name);
            e.attributes = p.value("attributes", nlohmann::json::object());
            f.palette.push_back(std::move(e));
        }
        const auto chat = j.value("chat", nlohmann::json::object());
        for (const auto& r : chat.value("rules", nlohmann::json::array())) {
            ChatRule rule;
            if (r.contains("contains")) {
                rule.contains = r["contains"].is_string() ? std::vector<std::string>{r["contains"].get<std::string>()}
                                                          : r["contains"].get<std::vector<std::string>>();
            }
            if (r.contains("image_count")) {
                rule.image_count = r["image_count"].get<std::size_t>();
            }
            rule.handler = r.value("handler", "");
            rule.response = r.value("response", "");
            rule.latency = std::chrono::milliseconds{r.value("latency_ms", 0)};
            static const std::set<std::string> handlers{"", "describe", "attribute", "validate", "define"};
            if (handlers.count(rule.handler) == 0) {
                throw Error(ErrorCode::kFixtureInvalid, "unknown chat handler: " + rule.handler);
            }
            f.chat_rules.push_back(std::move(rule));
        }
        f.describe_style = chat.value("describe_style", "plain");
        f.validator_error_rate = chat.value("validator_error_rate", 0.0);

        const auto det = j.value("detector", nlohmann::json::object());
        for (const auto& r : det.value("rules", nlohmann::json::array())) {
            DetectorRule rule{r.at("prompt").get<std::string>(), {}};
            for (const auto& d : r.value("detections", nlohmann::json::array())) {
                rule.detections.emplace_back(d.at("bbox").get<BBox>(), d.at("score").get<double>());
            }
            f.detector_rules.push_back(std::move(rule));
        }
        f.detector_geometric = det.value("geometric", true);
        f.detector_score = det.value("score", 0.9);
        f.detector_error_rate = det.value("error_rate", 0.0);
        f.distractor_score = det.value("distractor_score", 0.0);

        const auto trk = j.value("tracker", nlohmann::json::object());
        f.tracker_mode = trk.value("mode", "rectangle");
        f.tracker_fill = trk.value("fill", "inclusive");
        if (f.tracker_mode != "rectangle" && f.tracker_mode != "color") {
            throw Error(ErrorCode::kFixtureInvalid, "tracker.mode must be rectangle or color");
        }
        if (f.tracker_fill != "inclusive" && f.tracker_fill != "half_open") {
            throw Error(ErrorCode::kFixtureInvalid, "tracker.fill must be inclusive or half_open");
        }
        for (const auto& e : trk.value("empty_masks", nlohmann::json::array())) {
            f.empty_masks.push_back(EmptyMaskScript{e.at("track").get<std::int64_t>(), e.at("from_frame").get<std::int64_t>(),
                                                    e.at("to_frame").get<std::int64_t>()});
        }

        const auto emb = j.value("embedder", nlohmann::json::object());
        f.embed_dim = emb.value("dim", std::size_t{64});
        const auto codebook = emb.value("codebook", nlohmann::json::object());
        for (const auto& [text, vec] : codebook.items()) {
            auto v = vec.get<std::vector<double>>();
            if (v.size() != f.embed_dim) {
                throw Error(ErrorCode::kFixtureInvalid, "codebook vector for '" + text + "' does not match embedder.dim");
            }
            f.codebook.emplace(text, std::move(v));
        }
        if (f.embed_dim == 0) {
            throw Error(ErrorCode::kFixtureInvalid, "embedder.dim must be positive");
        }

        const auto faults = j.value("faults", nlohmann::json::object());
        for (const auto& [route, spec] : faults.items()) {
            FaultScript fault;
            fault.latency = std::chrono::milliseconds{spec.value("latency_ms", 0)};
            fault.fail_first = spec.value("fail_first", 0);
            fault.always_fail = spec.value("always_fail", false);
            fault.fail_status = spec.value("fail_status", 503);
            f.faults.emplace(route, fault);
        }
        f.down = j.value("down", false);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kFixtureInvalid, std::string("mock fixture: ") + e.what());
    }
    return f;
}

MockFixture MockFixture::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::kFixtureInvalid, "cannot open mock fixture: " + path.string());
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorCode::kFixtureInvalid, "mock fixture is not valid JSON: " + path.string());
    }
    return from_json(j);
}

MockServices::MockServices(MockFixture fixture) : fixture_(std::move(fixture)) {}

std::size_t MockServices::calls(const std::string& route) const {
    std::lock_guard lock(mutex_);
    const auto it = calls_.find(route);
    return it == calls_.end() ? 0 : it->second;
}

void MockServices::set_fault(const std::string& route, FaultScript fault) {
    std::lock_guard lock(mutex_);
    fixture_.faults[route] = fault;
}

void MockServices::set_down(bool down) {
    std::lock_guard lock(mutex_);
    fixture_.down = down;
}

MockReply MockServices::handle(std::string_view method, std::string_view path, const std::string& body) {
    std::string route;
    if (path == "/health") {
        route = "health";
    } else if (path == "/chat/completions" || path == "/v1/chat/completions") {
        route = "chat";
    } else if (path == "/detect") {
        route = "detect";
    } else if (path == "/track/init" || path == "/track/step") {
        route = "track";
    } else if (path == "/embed") {
        route = "embed";
    } else {
        return error_reply(404, "no such route: " + std::string(path));
    }

    FaultScript fault;
    std::size_t call_index = 0;
    {
        std::lock_guard lock(mutex_);
        call_index = calls_[route]++;
        if (fixture_.down) {
            return error_reply(503, "service down");
        }
        if (const auto it = fixture_.faults.find(route); it != fixture_.faults.end()) {
            fault = it->second;
        } else if (const auto all = fixture_.faults.find("*"); all != fixture_.faults.end() && route != "health") {
            fault = all->second;
        }
    }
    if (fault.always_fail || static_cast<int>(call_index) < fault.fail_first) {
        auto reply = error_reply(fault.fail_status, "scripted failure");
        reply.latency = fault.latency;
        return reply;
    }

    MockReply reply;
    if (route == "health") {
        if (method != "GET") {
            return error_reply(405, "health is GET only");
        }
        reply = json_reply({{"status", "ready"}});
    } else {
        const auto request = nlohmann::json::parse(body, nullptr, false);
        if (request.is_discarded() || !request.is_object()) {
            return error_reply(400, "request body must be a JSON object");
        }
        try {
            if (route == "chat") {
                reply = handle_chat(request);
            } else if (route == "detect") {
                reply = handle_detect(request);
            } else if (route == "track") {
                reply = handle_track(request, path == "/track/init");
            } else {
                reply = handle_embed(request);
            }
        } catch (const nlohmann::json::exception& e) {
            return error_reply(400, std::string("bad request: ") + e.what());
        } catch (const Error& e) {
            return error_reply(400, std::string("bad request: ") + e.what());
        }
    }
    reply.latency += fault.latency;
    return reply;
}

MockReply MockServices::handle_chat(const nlohmann::json& body) {
    const ChatContent content = read_chat(body);
    const ChatRule* rule = nullptr;
    for (const auto& r : fixture_.chat_rules) {
        const bool texts = std::all_of(r.contains.begin(), r.contains.end(),
                                       [&](const std::string& s) { return content.text.find(s) != std::string::npos; });
        const bool images = !r.image_count || *r.image_count == content.images.size();
        if (texts && images) {
            rule = &r;
            break;
        }
    }

    std::string text;
    std::chrono::milliseconds latency{0};
    if (rule == nullptr) {
        text = "I am not sure what you are asking for.";
    } else {
        latency = rule->latency;
        if (rule->handler.empty()) {
            text = rule->response;
        } else if (rule->handler == "define") {
            text = define(content.text);
        } else {
            if (content.images.empty()) {
                return error_reply(400, "handler " + rule->handler + " needs an image");
            }
            const Image image = Image::from_base64(content.images.front());
            if (rule->handler == "describe") {
                text = describe(image);
            } else if (rule->handler == "attribute") {
                text = attribute(content.text, image);
            } else {
                if (content.images.size() < 2) {
                    return error_reply(400, "validate handler needs a full image and a crop");
                }
                text = validate(Image::from_base64(content.images[1]), content.images[1]);
            }
        }
    }
    const nlohmann::json out{
        {"id", "mock-" + hex64(fnv1a64(body.dump()))},
        {"object", "chat.completion"},
        {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}, {"finish_reason", "stop"}}}},
        {"usage", {{"prompt_tokens", static_cast<int>(split_words(content.text).size())},
                   {"completion_tokens", static_cast<int>(split_words(text).size())}}}};
    auto reply = json_reply(out);
    reply.latency = latency;
    return reply;
}

std::string MockServices::describe(const Image& image) const {
    auto list = nlohmann::json::array();
    for (const auto& p : find_palette(image, fixture_.palette)) {
        const auto& e = fixture_.palette[p.palette_index];
        nlohmann::json item = e.attributes;
        item["object_name"] = e.object_name;
        item["description"] = e.description;
        list.push_back(std::move(item));
    }
    const std::string payload = list.dump(2);
    if (fixture_.describe_style == "fenced") {
        return "```json\n" + payload + "\n```";
    }
    if (fixture_.describe_style == "prose") {
        return "Sure! Here is the structured description you asked for:\n```json\n" + payload +
               "\n```\nLet me know if you need anything else.";
    }
    return payload;
}

std::string MockServices::attribute(const std::string& text, const Image& image) const {
    const std::string task = to_lower(line_value(text, "Task:"));
    auto list = nlohmann::json::array();
    for (const auto& p : find_palette(image, fixture_.palette)) {
        const auto& name = fixture_.palette[p.palette_index].object_name;
        if (!task.empty() && task.find(to_lower(name)) != std::string::npos) {
            list.push_back(name);
        }
    }
    return list.dump();
}

std::string MockServices::validate(const Image& crop, const std::string& crop_payload) const {
    if (fixture_.validator_error_rate > 0.0 && unit_hash(fixture_.seed, "validate:" + crop_payload) < fixture_.validator_error_rate) {
        return "invalid";
    }
    const auto present = find_palette(crop, fixture_.palette);
    const auto best = std::max_element(present.begin(), present.end(),
                                       [](const auto& a, const auto& b) { return a.pixels < b.pixels; });
    const double area = static_cast<double>(crop.width()) * crop.height();
    if (best == present.end() || static_cast<double>(best->pixels) < 0.05 * area) {
        return "invalid";
    }
    return fixture_.palette[best->palette_index].object_name;
}

std::string MockServices::define(const std::string& text) const {
    std::string name = line_value(text, "object_name:");
    if (name.empty()) {
        name = line_value(text, "class:");
    }
    const std::string description = line_value(text, "description:");
    if (name.empty()) {
        return "An object.";
    }
    std::string out = "A " + name + " is a kind of " + name + ".";
    if (!description.empty()) {
        out += " It looks like " + description + ".";
    }
    return out;
}

MockReply MockServices::handle_detect(const nlohmann::json& body) {
    const Image image = Image::from_base64(body.at("image").get<std::string>());
    const auto prompts = body.at("prompts").get<std::vector<std::string>>();
    const auto present = find_palette(image, fixture_.palette);
    const std::string image_key = hex64(fnv1a64(body.at("image").get<std::string>()));

    auto detections = nlohmann::json::array();
    const auto add = [&](std::size_t prompt, const BBox& box, double score) {
        detections.push_back({{"prompt_index", prompt}, {"bbox", box}, {"score", score}});
    };
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        const auto rule = std::find_if(fixture_.detector_rules.begin(), fixture_.detector_rules.end(),
                                       [&](const DetectorRule& r) { return r.prompt == prompts[i]; });
        if (rule != fixture_.detector_rules.end()) {
            for (const auto& [box, score] : rule->detections) {
                add(i, box, score);
            }
            continue;
        }
        if (!fixture_.detector_geometric) {
            continue;
        }
        const std::string prompt = to_lower(trim(prompts[i]));
        for (std::size_t k = 0; k < present.size(); ++k) {
            const auto& e = fixture_.palette[present[k].palette_index];
            if (to_lower(e.description) != prompt && to_lower(e.object_name) != prompt) {
                continue;
            }
            add(i, present[k].bounds, fixture_.detector_score);
            if (present.size() > 1) {
                const auto& other = present[(k + 1) % present.size()];
                if (fixture_.detector_error_rate > 0.0 &&
                    unit_hash(fixture_.seed, "detect:" + image_key + ":" + prompts[i]) < fixture_.detector_error_rate) {
                    add(i, other.bounds, std::min(1.0, fixture_.detector_score + 0.05));
                }
                if (fixture_.distractor_score > 0.0) {
                    add(i, other.bounds, fixture_.distractor_score);
                }
            }
        }
    }
    return json_reply({{"detections", detections}});
}

nlohmann::json MockServices::track_masks(const TrackerState& state, const Image& image) const {
    auto tracks = nlohmann::json::array();
    const cv::Mat& px = image.pixels();
    for (const auto& t : state.tracks) {
        BinaryMask mask(image.width(), image.height());
        const bool scripted_empty = std::any_of(fixture_.empty_masks.begin(), fixture_.empty_masks.end(), [&](const EmptyMaskScript& s) {
            return s.track == t.id && state.frame >= s.from_frame && state.frame <= s.to_frame;
        });
        if (!scripted_empty) {
            if (t.palette_index) {
                const auto& rgb = fixture_.palette[*t.palette_index].rgb;
                const cv::Vec3b target(rgb[2], rgb[1], rgb[0]);
                for (int r = 0; r < px.rows; ++r) {
                    const auto* row = px.ptr<cv::Vec3b>(r);
                    for (int c = 0; c < px.cols; ++c) {
                        if (row[c] == target) {
                            mask.set(r, c);
                        }
                    }
                }
            } else {
                const int extra = fixture_.tracker_fill == "inclusive" ? 1 : 0;
                mask.fill_rect(static_cast<int>(std::floor(t.box.x0)), static_cast<int>(std::floor(t.box.y0)),
                               static_cast<int>(std::ceil(t.box.x1)) + extra, static_cast<int>(std::ceil(t.box.y1)) + extra);
            }
        }
        tracks.push_back({{"id", t.id}, {"mask_rle", encode_rle(mask)}});
    }
    return tracks;
}

MockReply MockServices::handle_track(const nlohmann::json& body, bool init) {
    const Image image = Image::from_base64(body.at("image").get<std::string>());
    const auto boxes = body.at(init ? "boxes" : "add_boxes").get<std::vector<BBox>>();

    std::lock_guard lock(mutex_);
    std::string state_id;
    if (init) {
        state_id = "state-" + std::to_string(next_state_++);
        trackers_[state_id] = TrackerState{};
    } else {
        state_id = body.at("state_id").get<std::string>();
        if (trackers_.count(state_id) == 0) {
            return error_reply(404, "unknown state_id " + state_id);
        }
    }
    TrackerState& state = trackers_[state_id];
    if (!init && body.value("advance", true)) {
        ++state.frame;
    }
    const auto present_in = [&](const BBox& box) -> std::optional<std::size_t> {
        if (fixture_.tracker_mode != "color") {
            return std::nullopt;
        }
        const BBox clamped = clamp_box(box, image.width(), image.height());
        if (!clamped.valid()) {
            return std::nullopt;
        }
        const auto present = find_palette(image.crop(clamped), fixture_.palette);
        const auto best = std::max_element(present.begin(), present.end(),
                                           [](const auto& a, const auto& b) { return a.pixels < b.pixels; });
        if (best == present.end()) {
            return std::nullopt;
        }
        return best->palette_index;
    };
    for (const auto& box : boxes) {
        state.tracks.push_back(MockTrack{state.next_id++, box, present_in(box)});
    }
    return json_reply({{"state_id", state_id}, {"frame", state.frame}, {"tracks", track_masks(state, image)}});
}

std::vector<double> MockServices::embed_one(const std::string& text) const {
    if (const auto it = fixture_.codebook.find(text); it != fixture_.codebook.end()) {
        return it->second;
    }
    std::vector<double> v(fixture_.embed_dim, 0.0);
    auto words = tokens(text);
    if (words.empty()) {
        words.push_back(text);
    }
    for (const auto& w : words) {
        std::uint64_t state = fnv1a64(w, 0xcbf29ce484222325ULL ^ fixture_.seed);
        for (auto& x : v) {
            x += static_cast<double>(splitmix64(state) >> 11) / static_cast<double>(1ULL << 52) - 1.0;
        }
    }
    return v;
}

MockReply MockServices::handle_embed(const nlohmann::json& body) {
    auto vectors = nlohmann::json::array();
    for (const auto& t : body.at("texts")) {
        vectors.push_back(embed_one(t.get<std::string>()));
    }
    return json_reply({{"vectors", vectors}});
}

}  // namespace grounder::gateway::mock
