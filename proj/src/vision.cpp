// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/vision.hpp"

#include <cctype>
#include <nlohmann/json.hpp>

#include "hazardkit/util.hpp"

namespace hazardkit::vision {

WorkingImage prepare_image(const std::filesystem::path& path) {
    std::string ext = util::to_lower(path.extension().string());
    gateway::ImageMedia media =
        (ext == ".jpg" || ext == ".jpeg") ? gateway::ImageMedia::jpeg : gateway::ImageMedia::png;
    return prepare_image_bytes(path.stem().string(), util::read_binary_file(path), media);
}

WorkingImage prepare_image_bytes(std::string image_id, std::vector<std::uint8_t> bytes,
                                 gateway::ImageMedia media) {
    WorkingImage working;
    working.image_id = std::move(image_id);
    working.image = Image::decode(bytes);
    if (std::max(working.image.width(), working.image.height()) > kMaxImageDim) {
        working.image = working.image.downscale_to_max(kMaxImageDim);
        working.bytes = working.image.encode_png();
        working.media = gateway::ImageMedia::png;
        working.downscaled = true;
    } else {
        working.bytes = std::move(bytes);
        working.media = media;
    }
    return working;
}

std::string scene_description_prompt() {
    return "You are a construction safety inspector. Give a detailed and technical "
           "description of this construction site image. Cover the workers and their "
           "activities, the equipment and materials present, the spatial layout, and any "
           "visible site conditions.";
}

std::string scenario_prediction_prompt(const std::string& description) {
    return "You are a construction safety inspector. Based on the scene description below, "
           "infer possible accident scenarios. Reason about object interactions, spatial "
           "layout, and human activity, looking for unsafe configurations or proximity "
           "violations.\n\nScene description:\n" +
           description +
           "\n\nAnswer with a numbered list, one scenario per line. If no plausible accident "
           "scenario exists, answer exactly: No plausible accident scenarios.";
}

std::string high_risk_filter_prompt(const std::string& prediction_text,
                                    const taxonomy::Taxonomy& taxonomy) {
    std::string prompt =
        "From the predicted accident scenarios below, keep only hazards that are both high "
        "severity and tied to a specific object that is clearly visible in the image. Tag "
        "each kept hazard with the number of the matching category.\n\nCategories:\n";
    for (const taxonomy::HazardCategory& c : taxonomy.categories()) {
        prompt += std::to_string(c.category_id);
        prompt += ". ";
        prompt += c.name;
        prompt += "\n";
    }
    prompt += "\nPredicted scenarios:\n";
    prompt += prediction_text;
    prompt +=
        "\n\nAnswer with a JSON array only, one entry per kept hazard:\n"
        "[{\"object\": \"<visible object>\", \"category_id\": <number>, "
        "\"rationale\": \"<why it is high risk>\"}]\n"
        "If nothing qualifies, answer [].";
    return prompt;
}

std::string localization_prompt(const HazardFinding& finding,
                                const taxonomy::Taxonomy& taxonomy) {
    return "Locate this object in the image: " + finding.object_label + " (hazard: " +
           taxonomy.resolve(finding.category_id).name +
           ").\nEstimate the object's center and size in ratio format relative to the image "
           "dimensions.\nAnswer with JSON only:\n"
           "{\"cx\": <0..1>, \"cy\": <0..1>, \"w\": <0..1>, \"h\": <0..1>}";
}

std::string localization_retry_prompt(const HazardFinding& finding,
                                      const taxonomy::Taxonomy& taxonomy) {
    return localization_prompt(finding, taxonomy) +
           "\n\nYour previous answer could not be parsed as box coordinates. Answer with "
           "exactly one JSON object of the form above and nothing else.";
}

std::string refinement_prompt(const HazardFinding& finding) {
    return "The image is a cropped view of your previous detection of: " +
           finding.object_label +
           ". The drawn rectangle is your current bounding box. Review it. If the box "
           "tightly fits the object, answer exactly: CONFIRM. Otherwise answer with "
           "corrected ratios relative to this cropped image, JSON only:\n"
           "{\"cx\": <0..1>, \"cy\": <0..1>, \"w\": <0..1>, \"h\": <0..1>}";
}

gateway::ChatRequest vision_request(std::string prompt, const std::vector<std::uint8_t>& bytes,
                                    gateway::ImageMedia media,
                                    const gateway::ChatParams& params) {
    gateway::ChatRequest request;
    request.model_name = params.model_name;
    request.temperature = params.temperature;
    request.max_output_tokens = params.max_output_tokens;
    request.messages.push_back(
        gateway::Message::user_with_image(std::move(prompt), bytes, media));
    return request;
}

gateway::ChatRequest text_request(std::string prompt, const gateway::ChatParams& params) {
    gateway::ChatRequest request;
    request.model_name = params.model_name;
    request.temperature = params.temperature;
    request.max_output_tokens = params.max_output_tokens;
    request.messages.push_back(gateway::Message::text(gateway::Role::user, std::move(prompt)));
    return request;
}

namespace {

bool is_no_scenario_marker(std::string_view raw) {
    std::string t = util::to_lower(util::trim(raw));
    while (!t.empty() && (t.back() == '.' || t.back() == '!')) t.pop_back();
    return t == "no plausible accident scenarios" || t == "no plausible accident scenario" ||
           t == "none";
}

// "1. text", "2) text", "- text", "* text"
std::optional<std::string> list_item_text(const std::string& line) {
    std::string t = util::trim(line);
    if (t.empty()) return std::nullopt;
    if (t[0] == '-' || t[0] == '*') {
        return util::trim(t.substr(1));
    }
    std::size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    if (i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')')) {
        return util::trim(t.substr(i + 1));
    }
    return std::nullopt;
}

std::optional<int> trailing_category_tag(const std::string& narrative) {
    std::string lower = util::to_lower(narrative);
    std::size_t pos = lower.rfind("category");
    if (pos == std::string::npos) return std::nullopt;
    std::size_t i = pos + 8;
    while (i < lower.size() && (lower[i] == ' ' || lower[i] == ':' || lower[i] == '#')) ++i;
    std::size_t start = i;
    while (i < lower.size() && std::isdigit(static_cast<unsigned char>(lower[i]))) ++i;
    if (i == start) return std::nullopt;
    return std::stoi(lower.substr(start, i - start));
}

// First JSON value bounded by the given brackets, fences stripped.
std::optional<nlohmann::json> find_json(std::string_view raw, char open, char close) {
    std::size_t start = raw.find(open);
    std::size_t end = raw.rfind(close);
    if (start == std::string_view::npos || end == std::string_view::npos || end <= start) {
        return std::nullopt;
    }
    nlohmann::json j =
        nlohmann::json::parse(raw.substr(start, end - start + 1), nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
}

}  // namespace

std::vector<ScenarioItem> parse_scenario_list(std::string_view raw) {
    if (is_no_scenario_marker(raw)) {
        return {};
    }
    std::vector<ScenarioItem> items;
    for (const std::string& line : util::split(std::string(raw), '\n')) {
        if (auto text = list_item_text(line); text && !text->empty()) {
            ScenarioItem item;
            item.narrative = *text;
            item.category_id = trailing_category_tag(*text);
            items.push_back(std::move(item));
        }
    }
    if (items.empty()) {
        throw StageFailed("predict", "response is neither a list nor the no-scenario marker");
    }
    return items;
}

std::vector<HazardFinding> parse_findings(std::string_view raw,
                                          const taxonomy::Taxonomy& taxonomy,
                                          std::vector<std::string>* warnings) {
    auto warn = [&](const std::string& message) {
        if (warnings != nullptr) warnings->push_back(message);
    };
    auto j = find_json(raw, '[', ']');
    if (!j || !j->is_array()) {
        warn("filter answer is not a JSON array; keeping no findings");
        return {};
    }
    std::vector<HazardFinding> findings;
    for (const auto& entry : *j) {
        if (!entry.is_object() || !entry.contains("object") || !entry.contains("category_id") ||
            !entry.at("category_id").is_number_integer()) {
            warn("skipping malformed finding entry: " + entry.dump());
            continue;
        }
        HazardFinding finding;
        finding.object_label = entry.at("object").get<std::string>();
        finding.category_id = entry.at("category_id").get<int>();
        finding.rationale = entry.value("rationale", std::string{});
        try {
            taxonomy.resolve(finding.category_id);
        } catch (const taxonomy::UnknownCategory&) {
            warn("dropping finding '" + finding.object_label + "': unknown category " +
                 std::to_string(finding.category_id));
            continue;
        }
        findings.push_back(std::move(finding));
    }
    return findings;
}

std::optional<RatioBBox> parse_bbox_json(std::string_view raw) {
    auto j = find_json(raw, '{', '}');
    if (!j || !j->is_object()) return std::nullopt;
    for (const char* key : {"cx", "cy", "w", "h"}) {
        if (!j->contains(key) || !j->at(key).is_number()) return std::nullopt;
    }
    RatioBBox box;
    box.cx = j->at("cx").get<double>();
    box.cy = j->at("cy").get<double>();
    box.w = j->at("w").get<double>();
    box.h = j->at("h").get<double>();
    return box;
}

bool is_confirmation(std::string_view raw) {
    std::string t = util::to_lower(util::trim(raw));
    while (!t.empty() && (t.back() == '.' || t.back() == '!')) t.pop_back();
    return t == "confirm" || t == "confirmed";
}

SceneDescription describe_scene(const WorkingImage& image, gateway::Gateway& gateway,
                                const gateway::ChatParams& params, Exchange* exchange) {
    Exchange local;
    Exchange& ex = exchange != nullptr ? *exchange : local;
    ex = {"describe", scene_description_prompt(), ""};
    gateway::ChatRequest request = vision_request(ex.prompt, image.bytes, image.media, params);
    ex.response = gateway.send_chat(request).text;
    if (util::trim(ex.response).empty()) {
        throw StageFailed("describe", "model returned empty text");
    }
    return SceneDescription{image.image_id, ex.response};
}

ScenarioPrediction predict_scenarios(const SceneDescription& description,
                                     gateway::Gateway& gateway,
                                     const gateway::ChatParams& params, Exchange* exchange) {
    if (util::trim(description.text).empty()) {
        throw StageFailed("predict", "empty scene description");
    }
    Exchange local;
    Exchange& ex = exchange != nullptr ? *exchange : local;
    ex = {"predict", scenario_prediction_prompt(description.text), ""};
    ex.response = gateway.send_chat(text_request(ex.prompt, params)).text;
    ScenarioPrediction prediction;
    prediction.scenarios = parse_scenario_list(ex.response);
    prediction.raw_text = ex.response;
    return prediction;
}

std::vector<HazardFinding> filter_high_risk(const ScenarioPrediction& prediction,
                                            const taxonomy::Taxonomy& taxonomy,
                                            gateway::Gateway& gateway,
                                            const gateway::ChatParams& params,
                                            Exchange* exchange,
                                            std::vector<std::string>* warnings) {
    Exchange local;
    Exchange& ex = exchange != nullptr ? *exchange : local;
    if (prediction.scenarios.empty()) {
        ex = {"filter", "", ""};
        return {};
    }
    ex = {"filter", high_risk_filter_prompt(prediction.raw_text, taxonomy), ""};
    ex.response = gateway.send_chat(text_request(ex.prompt, params)).text;
    return parse_findings(ex.response, taxonomy, warnings);
}

RatioBBox localize(const WorkingImage& image, const HazardFinding& finding,
                   const taxonomy::Taxonomy& taxonomy, gateway::Gateway& gateway,
                   const gateway::ChatParams& params, std::vector<Exchange>* log) {
    auto attempt = [&](const std::string& prompt) -> std::optional<RatioBBox> {
        const std::string text =
            gateway.send_chat(vision_request(prompt, image.bytes, image.media, params)).text;
        if (log != nullptr) {
            log->push_back({"localize:" + finding.object_label, prompt, text});
        }
        return parse_bbox_json(text);
    };

    std::optional<RatioBBox> box = attempt(localization_prompt(finding, taxonomy));
    if (!box) {
        box = attempt(localization_retry_prompt(finding, taxonomy));
    }
    if (!box) {
        throw StageFailed("localize",
                          "unparsable coordinates for '" + finding.object_label + "'");
    }
    std::optional<RatioBBox> clamped = clamp_ratio_bbox(*box);
    if (!clamped) {
        throw StageFailed("localize",
                          "degenerate box for '" + finding.object_label + "'");
    }
    return *clamped;
}

Annotation refine_bbox(const WorkingImage& image, const HazardFinding& finding,
                       const RatioBBox& initial, const taxonomy::Taxonomy& taxonomy,
                       gateway::Gateway& gateway, const gateway::ChatParams& params,
                       std::vector<Exchange>* log) {
    const int w = image.image.width();
    const int h = image.image.height();
    const PixelRect rect = ratio_to_pixels(initial, w, h);
    const PixelRect crop_rect = expand_with_margin(rect, kCropMargin, w, h);

    Image crop = image.image.crop(crop_rect);
    const PixelRect box_in_crop{rect.x0 - crop_rect.x0, rect.y0 - crop_rect.y0,
                                rect.x1 - crop_rect.x0, rect.y1 - crop_rect.y0};
    crop.draw_rect(box_in_crop, family_color(taxonomy.resolve(finding.category_id).family_id),
                   3);

    std::string prompt = refinement_prompt(finding);
    const std::string text =
        gateway
            .send_chat(vision_request(prompt, crop.encode_png(), gateway::ImageMedia::png,
                                      params))
            .text;
    if (log != nullptr) {
        log->push_back({"refine:" + finding.object_label, std::move(prompt), text});
    }

    Annotation annotation;
    annotation.finding = finding;
    annotation.bbox = initial;
    annotation.refined = false;
    annotation.refinement_delta = 1.0;
    if (is_confirmation(text)) {
        return annotation;
    }
    std::optional<RatioBBox> corrected = parse_bbox_json(text);
    if (!corrected) {
        return annotation;  // unparsable refinement keeps the initial box
    }
    std::optional<RatioBBox> in_crop = clamp_ratio_bbox(*corrected);
    if (!in_crop) {
        return annotation;
    }
    RatioBBox refined = crop_relative_to_full(*in_crop, crop_rect, w, h);
    annotation.bbox = refined;
    annotation.refined = true;
    annotation.refinement_delta = iou(initial, refined);
    return annotation;
}

std::vector<std::uint8_t> annotate_image(const Image& image,
                                         const std::vector<Annotation>& annotations,
                                         const taxonomy::Taxonomy& taxonomy) {
    Image canvas = image;
    for (const Annotation& a : annotations) {
        const taxonomy::HazardCategory& category = taxonomy.resolve(a.finding.category_id);
        const Rgb color = family_color(category.family_id);
        const PixelRect rect = ratio_to_pixels(a.bbox, canvas.width(), canvas.height());
        canvas.draw_rect(rect, color, 3);
        canvas.draw_label(category.name, rect.x0, rect.y0, color);
    }
    return canvas.encode_png();
}

namespace {

nlohmann::ordered_json annotation_to_json(const Annotation& a,
                                          const taxonomy::Taxonomy& taxonomy) {
    nlohmann::ordered_json j;
    j["object_label"] = a.finding.object_label;
    j["category_id"] = a.finding.category_id;
    j["category_name"] = taxonomy.resolve(a.finding.category_id).name;
    j["rationale"] = a.finding.rationale;
    j["bbox"] = {{"cx", a.bbox.cx}, {"cy", a.bbox.cy}, {"w", a.bbox.w}, {"h", a.bbox.h}};
    j["refined"] = a.refined;
    j["refinement_delta"] = a.refinement_delta;
    return j;
}

struct RunWriter {
    std::filesystem::path dir;

    void stage(int n, const std::string& prompt, const std::string& response) const {
        const std::string base = "stage" + std::to_string(n);
        util::write_text_file_atomic(dir / (base + "_prompt.txt"), prompt);
        util::write_text_file_atomic(dir / (base + "_response.txt"), response);
    }

    void stage4(const std::vector<Exchange>& exchanges) const {
        std::string prompts;
        std::string responses;
        for (const Exchange& e : exchanges) {
            prompts += "--- " + e.label + " ---\n" + e.prompt + "\n";
            responses += "--- " + e.label + " ---\n" + e.response + "\n";
        }
        util::write_text_file_atomic(dir / "stage4_prompt.txt", prompts);
        util::write_text_file_atomic(dir / "stage4_response.txt", responses);
    }
};

}  // namespace

PipelineResult run_pipeline(const std::filesystem::path& image_path,
                            const taxonomy::Taxonomy& taxonomy, gateway::Gateway& gateway,
                            const gateway::ChatParams& params,
                            const std::filesystem::path& run_root) {
    WorkingImage image = prepare_image(image_path);
    PipelineResult result;
    result.image_id = image.image_id;
    result.run_dir = run_root / image.image_id;
    std::filesystem::create_directories(result.run_dir);
    RunWriter writer{result.run_dir};

    auto write_annotations_json = [&](const std::optional<std::string>& error) {
        nlohmann::ordered_json j;
        j["image_id"] = result.image_id;
        j["template_version"] = std::string(kVisionTemplateVersion);
        j["image"] = {{"width", image.image.width()},
                      {"height", image.image.height()},
                      {"downscaled", image.downscaled}};
        j["warnings"] = result.warnings;
        j["annotations"] = nlohmann::ordered_json::array();
        for (const Annotation& a : result.annotations) {
            j["annotations"].push_back(annotation_to_json(a, taxonomy));
        }
        j["error"] = error ? nlohmann::ordered_json(*error) : nlohmann::ordered_json(nullptr);
        util::write_text_file_atomic(result.run_dir / "annotations.json", j.dump(2) + "\n");
    };

    Exchange ex1, ex2, ex3;
    std::vector<Exchange> stage4_log;
    auto flush_stages = [&]() {
        if (!ex1.label.empty()) writer.stage(1, ex1.prompt, ex1.response);
        if (!ex2.label.empty()) writer.stage(2, ex2.prompt, ex2.response);
        if (!ex3.label.empty()) writer.stage(3, ex3.prompt, ex3.response);
        writer.stage4(stage4_log);
    };
    try {
        result.description = describe_scene(image, gateway, params, &ex1);
        result.prediction = predict_scenarios(result.description, gateway, params, &ex2);
        result.findings = filter_high_risk(result.prediction, taxonomy, gateway, params, &ex3,
                                           &result.warnings);
        for (const HazardFinding& finding : result.findings) {
            RatioBBox initial =
                localize(image, finding, taxonomy, gateway, params, &stage4_log);
            result.annotations.push_back(
                refine_bbox(image, finding, initial, taxonomy, gateway, params, &stage4_log));
        }
    } catch (const std::exception& e) {
        flush_stages();
        write_annotations_json(std::string(e.what()));
        throw;
    }

    flush_stages();
    write_annotations_json(std::nullopt);
    const std::vector<std::uint8_t> png = annotate_image(image.image, result.annotations, taxonomy);
    util::write_binary_file_atomic(result.run_dir / "annotated.png", png);
    return result;
}

}  // namespace hazardkit::vision
