// SPDX-License-Identifier: Apache-2.0
// Four-stage chained visual hazard pipeline: scene description, scenario
// prediction, high-risk filtering, and ratio-box localization with one
// crop-and-review refinement round.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hazardkit/gateway.hpp"
#include "hazardkit/geometry.hpp"
#include "hazardkit/image.hpp"
#include "hazardkit/taxonomy.hpp"

namespace hazardkit::vision {

inline constexpr std::string_view kVisionTemplateVersion = "vision-v1";
inline constexpr int kMaxImageDim = 2048;
inline constexpr double kCropMargin = 0.5;

struct SceneDescription {
    std::string image_id;
    std::string text;
};

struct ScenarioItem {
    std::string narrative;
    std::optional<int> category_id;
};

struct ScenarioPrediction {
    std::vector<ScenarioItem> scenarios;  // empty means hazard-free scene
    std::string raw_text;                 // model output, fed verbatim into stage 3
};

struct HazardFinding {
    std::string object_label;
    int category_id = 0;
    std::string rationale;
};

struct Annotation {
    HazardFinding finding;
    RatioBBox bbox;
    bool refined = false;
    double refinement_delta = 1.0;  // IoU between initial and refined boxes
};

class StageFailed : public std::runtime_error {
  public:
    StageFailed(const std::string& stage, const std::string& message)
        : std::runtime_error("stage " + stage + " failed: " + message), stage_(stage) {}
    const std::string& stage() const { return stage_; }

  private:
    std::string stage_;
};

// Decoded image plus the exact bytes sent to the model (downscaled to
// kMaxImageDim and re-encoded as PNG when the original is too large).
struct WorkingImage {
    std::string image_id;
    Image image;
    std::vector<std::uint8_t> bytes;
    gateway::ImageMedia media = gateway::ImageMedia::png;
    bool downscaled = false;
};

WorkingImage prepare_image(const std::filesystem::path& path);
WorkingImage prepare_image_bytes(std::string image_id, std::vector<std::uint8_t> bytes,
                                 gateway::ImageMedia media);

// Prompt builders are pure so tests and fixture writers can reproduce every
// request the pipeline issues.
std::string scene_description_prompt();
std::string scenario_prediction_prompt(const std::string& description);
std::string high_risk_filter_prompt(const std::string& prediction_text,
                                    const taxonomy::Taxonomy& taxonomy);
std::string localization_prompt(const HazardFinding& finding,
                                const taxonomy::Taxonomy& taxonomy);
std::string localization_retry_prompt(const HazardFinding& finding,
                                      const taxonomy::Taxonomy& taxonomy);
std::string refinement_prompt(const HazardFinding& finding);

gateway::ChatRequest vision_request(std::string prompt, const std::vector<std::uint8_t>& bytes,
                                    gateway::ImageMedia media, const gateway::ChatParams& params);
gateway::ChatRequest text_request(std::string prompt, const gateway::ChatParams& params);

// Response parsers, also pure.
std::vector<ScenarioItem> parse_scenario_list(std::string_view raw);  // StageFailed on garbage
std::vector<HazardFinding> parse_findings(std::string_view raw, const taxonomy::Taxonomy& taxonomy,
                                          std::vector<std::string>* warnings);
std::optional<RatioBBox> parse_bbox_json(std::string_view raw);
bool is_confirmation(std::string_view raw);

struct Exchange {
    std::string label;  // e.g. "localize:chain"
    std::string prompt;
    std::string response;
};

SceneDescription describe_scene(const WorkingImage& image, gateway::Gateway& gateway,
                                const gateway::ChatParams& params, Exchange* exchange = nullptr);

ScenarioPrediction predict_scenarios(const SceneDescription& description,
                                     gateway::Gateway& gateway,
                                     const gateway::ChatParams& params,
                                     Exchange* exchange = nullptr);

// Keeps only findings whose category id resolves; invalid tags become
// warnings, never errors. Empty prediction short-circuits without a call.
std::vector<HazardFinding> filter_high_risk(const ScenarioPrediction& prediction,
                                            const taxonomy::Taxonomy& taxonomy,
                                            gateway::Gateway& gateway,
                                            const gateway::ChatParams& params,
                                            Exchange* exchange = nullptr,
                                            std::vector<std::string>* warnings = nullptr);

// One corrective retry on unparsable coordinates; a degenerate box (w or h
// <= 0) fails immediately.
RatioBBox localize(const WorkingImage& image, const HazardFinding& finding,
                   const taxonomy::Taxonomy& taxonomy, gateway::Gateway& gateway,
                   const gateway::ChatParams& params, std::vector<Exchange>* log = nullptr);

// Sends the margin-expanded crop with the initial box drawn; the model
// either confirms or answers crop-relative corrected ratios. Exactly one
// round; unparsable answers keep the initial box.
Annotation refine_bbox(const WorkingImage& image, const HazardFinding& finding,
                       const RatioBBox& initial, const taxonomy::Taxonomy& taxonomy,
                       gateway::Gateway& gateway, const gateway::ChatParams& params,
                       std::vector<Exchange>* log = nullptr);

// 3-px strokes colored by family, category name as a label at the box's
// top-left corner; returns PNG bytes.
std::vector<std::uint8_t> annotate_image(const Image& image,
                                         const std::vector<Annotation>& annotations,
                                         const taxonomy::Taxonomy& taxonomy);

struct PipelineResult {
    std::string image_id;
    SceneDescription description;
    ScenarioPrediction prediction;
    std::vector<HazardFinding> findings;
    std::vector<Annotation> annotations;
    std::vector<std::string> warnings;
    std::filesystem::path run_dir;
};

// Runs all stages, persisting each stage's prompt/response plus
// annotations.json and annotated.png under run_root/<image_id>/. On stage
// failure everything produced so far is already on disk and StageFailed
// propagates.
PipelineResult run_pipeline(const std::filesystem::path& image_path,
                            const taxonomy::Taxonomy& taxonomy, gateway::Gateway& gateway,
                            const gateway::ChatParams& params,
                            const std::filesystem::path& run_root);

}  // namespace hazardkit::vision
