// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/corpus.hpp"

#include <nlohmann/json.hpp>

#include "hazardkit/util.hpp"

namespace hazardkit::ingest {

namespace fs = std::filesystem;

namespace {

nlohmann::ordered_json report_to_json(const AccidentReport& report) {
    nlohmann::ordered_json j;
    j["inspection_id"] = report.inspection_id;
    j["detail_url"] = report.detail_url;
    j["raw_text"] = report.raw_text;
    j["fetched_at"] = report.fetched_at;
    j["truncated"] = report.truncated;
    return j;
}

AccidentReport report_from_json(const nlohmann::json& j) {
    AccidentReport report;
    report.inspection_id = j.at("inspection_id").get<std::string>();
    report.detail_url = j.at("detail_url").get<std::string>();
    report.raw_text = j.at("raw_text").get<std::string>();
    report.fetched_at = j.at("fetched_at").get<std::string>();
    report.truncated = j.at("truncated").get<bool>();
    return report;
}

}  // namespace

CorpusStore CorpusStore::open(const fs::path& root) {
    CorpusStore store;
    store.root_ = root;
    fs::create_directories(root / "reports");
    fs::path index_path = root / "index.json";
    if (fs::exists(index_path)) {
        nlohmann::json j = nlohmann::json::parse(util::read_text_file(index_path));
        for (const auto& [id, entry] : j.at("reports").items()) {
            std::string rel = entry.at("path").get<std::string>();
            if (!fs::exists(root / rel)) {
                throw CorpusError("index references missing file: " + rel);
            }
            store.index_[id] = rel;
        }
    }
    return store;
}

void CorpusStore::put(const AccidentReport& report) {
    if (report.inspection_id.empty()) {
        throw CorpusError("report must carry an inspection id");
    }
    if (report.raw_text.empty()) {
        throw CorpusError("report text must not be empty");
    }
    std::string rel = "reports/" + util::sanitize_for_filename(report.inspection_id) + ".json";
    util::write_text_file_atomic(root_ / rel, report_to_json(report).dump(2) + "\n");
    index_[report.inspection_id] = rel;

    nlohmann::ordered_json index;
    index["reports"] = nlohmann::ordered_json::object();
    for (const auto& [id, path] : index_) {
        index["reports"][id] = {{"path", path}};
    }
    util::write_text_file_atomic(root_ / "index.json", index.dump(2) + "\n");
}

AccidentReport CorpusStore::get(const std::string& inspection_id) const {
    auto it = index_.find(inspection_id);
    if (it == index_.end()) {
        throw NotFound(inspection_id);
    }
    return report_from_json(nlohmann::json::parse(util::read_text_file(root_ / it->second)));
}

std::vector<std::string> CorpusStore::list() const {
    std::vector<std::string> ids;
    ids.reserve(index_.size());
    for (const auto& [id, _] : index_) {
        ids.push_back(id);
    }
    return ids;  // std::map keeps them sorted
}

}  // namespace hazardkit::ingest
