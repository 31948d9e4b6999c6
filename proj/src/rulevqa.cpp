// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/rulevqa.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "hazardkit/image.hpp"
#include "hazardkit/util.hpp"
#include "hazardkit/vision.hpp"

namespace hazardkit::rulevqa {

SafetyRule ppe_rule() {
    return {"rule1", "Use of basic PPE when on foot at construction sites."};
}

namespace {

constexpr const char* kTemplates[10] = {
    "In the image, is anyone not wearing basic PPE?\n{RULE_LINE}\nAnswer only: Yes or No.",
    "Is anyone in this image violating basic PPE?\n{RULE_LINE}\nAnswer only: Yes or No.",
    "Does the image show any person missing required PPE?\n{RULE_LINE}\nAnswer one word: Yes or No.",
    "Is there at least one PPE wearing violation in the image?\n{RULE_LINE}\nAnswer only: Yes or No.",
    "Are any people on foot not wearing basic PPE?\n{RULE_LINE}\nAnswer only Yes or No.",
    "Check all visible people on the image for wearing the basic PPE.\n{RULE_LINE}\nAny violation present?\nAnswer only: Yes or No.",
    "Scan left-to-right: any person without basic PPE?\n{RULE_LINE}\nAnswer only: Yes or No.",
    "Evaluate PPE compliance for people in the image.\n{RULE_LINE}\nAny violation? \nAnswer only: Yes or No.",
    "Check the image carefully and answer if anyone is not wearing basic PPE.\n{RULE_LINE}\nIs there a violation? \nAnswer only: Yes or No.",
    "Your task is to check whether any worker in the construction site is missing basic PPE.\n{RULE_LINE}\nAnswer only: Yes or No.",
};

}  // namespace

PromptSet build_prompt_set(const SafetyRule& rule) {
    PromptSet set;
    set.rule = rule;
    for (std::size_t i = 0; i < set.prompts.size(); ++i) {
        std::string text = kTemplates[i];
        const std::string placeholder = "{RULE_LINE}";
        std::size_t pos = text.find(placeholder);
        text.replace(pos, placeholder.size(), rule.rule_line);
        set.prompts[i] = std::move(text);
    }
    return set;
}

AnswerOutcome normalize_answer(std::string_view raw) {
    AnswerOutcome outcome;
    outcome.raw_text = std::string(raw);

    std::vector<std::string> words;
    std::string current;
    for (char c : raw) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) words.push_back(std::move(current));

    if (words.empty()) {
        outcome.value = Answer::invalid;
        return outcome;
    }
    if (words.front() == "yes") {
        outcome.value = Answer::yes;
        return outcome;
    }
    if (words.front() == "no") {
        outcome.value = Answer::no;
        return outcome;
    }
    bool has_yes = false;
    bool has_no = false;
    for (const std::string& w : words) {
        if (w == "yes") has_yes = true;
        if (w == "no") has_no = true;
    }
    if (has_yes != has_no) {
        outcome.value = has_yes ? Answer::yes : Answer::no;
    } else {
        outcome.value = Answer::invalid;
    }
    return outcome;
}

VoteResult majority_vote(const std::vector<AnswerOutcome>& outcomes) {
    if (outcomes.empty()) {
        throw AllInvalid("no outcomes to vote over");
    }
    VoteResult vote;
    for (const AnswerOutcome& o : outcomes) {
        switch (o.value) {
            case Answer::yes: ++vote.yes_count; break;
            case Answer::no: ++vote.no_count; break;
            case Answer::invalid: ++vote.invalid_count; break;
        }
    }
    if (vote.yes_count + vote.no_count == 0) {
        throw AllInvalid("every outcome was invalid");
    }
    if (vote.yes_count == vote.no_count) {
        vote.decision = true;  // safety-conservative tie rule
        vote.tie_broken = true;
    } else {
        vote.decision = vote.yes_count > vote.no_count;
    }
    return vote;
}

double f1_score(double precision, double recall) {
    if (precision + recall <= 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

Metrics compute_metrics(long tp, long fp, long fn, long tn) {
    Metrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    m.tn = tn;
    m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = f1_score(m.precision, m.recall);
    return m;
}

std::vector<VqaSample> load_manifest(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw ManifestError("manifest not found: " + path.string());
    }
    const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";
    std::vector<VqaSample> samples;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    for (const std::string& line : util::read_lines(path)) {
        ++line_no;
        std::string trimmed = util::trim(line);
        if (trimmed.empty()) continue;
        if (line_no == 1 && util::starts_with_ci(trimmed, "sample_id")) continue;  // header
        std::vector<std::string> cols = util::split(trimmed, ',');
        if (cols.size() != 4) {
            throw MalformedRow(line_no, "expected 4 columns, got " + std::to_string(cols.size()));
        }
        VqaSample sample;
        sample.sample_id = util::trim(cols[0]);
        if (sample.sample_id.empty()) {
            throw MalformedRow(line_no, "empty sample_id");
        }
        std::filesystem::path img = util::trim(cols[1]);
        sample.image_path = img.is_absolute() ? img : base / img;
        sample.rule_id = util::trim(cols[2]);
        std::string gold = util::to_lower(util::trim(cols[3]));
        if (gold == "yes" || gold == "true" || gold == "1") {
            sample.gold_violation = true;
        } else if (gold == "no" || gold == "false" || gold == "0") {
            sample.gold_violation = false;
        } else {
            throw MalformedRow(line_no, "gold must be yes/no/true/false/1/0, got '" + gold + "'");
        }
        if (!seen.insert(sample.sample_id).second) {
            throw DuplicateSample(sample.sample_id);
        }
        if (!std::filesystem::exists(sample.image_path)) {
            throw MissingImage(sample.sample_id, sample.image_path.string());
        }
        try {
            vision::Image::load(sample.image_path);
        } catch (const vision::ImageDecodeError&) {
            throw MissingImage(sample.sample_id, sample.image_path.string());
        }
        samples.push_back(std::move(sample));
    }
    return samples;
}

namespace {

gateway::ImageMedia media_for(const std::filesystem::path& path) {
    std::string ext = util::to_lower(path.extension().string());
    return (ext == ".jpg" || ext == ".jpeg") ? gateway::ImageMedia::jpeg
                                             : gateway::ImageMedia::png;
}

}  // namespace

EvalResult evaluate(const std::vector<VqaSample>& samples, const SafetyRule& rule, EvalMode mode,
                    int prompt_index, gateway::Gateway& gateway,
                    const gateway::ChatParams& params, unsigned jobs) {
    const PromptSet prompt_set = build_prompt_set(rule);
    if (mode == EvalMode::single &&
        (prompt_index < 1 || prompt_index > static_cast<int>(prompt_set.prompts.size()))) {
        throw std::invalid_argument("prompt_index must be in 1..10");
    }

    EvalResult result;
    result.samples.resize(samples.size());
    util::parallel_for(samples.size(), jobs, [&](std::size_t i) {
        const VqaSample& sample = samples[i];
        SampleResult& sr = result.samples[i];
        sr.sample_id = sample.sample_id;
        sr.gold = sample.gold_violation;
        if (util::abort_flag().load()) {
            sr.failed = true;
            sr.error = "aborted";
            return;
        }
        try {
            const std::vector<std::uint8_t> bytes = util::read_binary_file(sample.image_path);
            const gateway::ImageMedia media = media_for(sample.image_path);
            auto ask = [&](const std::string& prompt) {
                gateway::ChatRequest request;
                request.model_name = params.model_name;
                request.temperature = params.temperature;
                request.max_output_tokens = params.max_output_tokens;
                request.messages.push_back(
                    gateway::Message::user_with_image(prompt, bytes, media));
                return normalize_answer(gateway.send_chat(request).text);
            };
            if (mode == EvalMode::single) {
                sr.outcomes.push_back(ask(prompt_set.prompts[prompt_index - 1]));
                const Answer a = sr.outcomes.front().value;
                sr.vote.yes_count = a == Answer::yes ? 1 : 0;
                sr.vote.no_count = a == Answer::no ? 1 : 0;
                sr.vote.invalid_count = a == Answer::invalid ? 1 : 0;
                sr.vote.decision = a == Answer::yes;
                sr.invalid_single = a == Answer::invalid;  // counted as predicted-no, flagged
            } else {
                for (const std::string& prompt : prompt_set.prompts) {
                    sr.outcomes.push_back(ask(prompt));
                }
                sr.vote = majority_vote(sr.outcomes);
            }
        } catch (const AllInvalid& e) {
            sr.failed = true;
            sr.error = e.what();
        } catch (const gateway::GatewayError& e) {
            sr.failed = true;
            sr.error = e.what();
        } catch (const std::exception& e) {
            sr.failed = true;
            sr.error = e.what();
        }
    });

    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (const SampleResult& sr : result.samples) {
        if (sr.failed) {
            ++result.failed_count;
            continue;
        }
        if (sr.vote.decision && sr.gold) ++tp;
        else if (sr.vote.decision && !sr.gold) ++fp;
        else if (!sr.vote.decision && sr.gold) ++fn;
        else ++tn;
    }
    result.metrics = compute_metrics(tp, fp, fn, tn);
    return result;
}

std::string results_to_jsonl(const EvalResult& result) {
    std::string out;
    for (const SampleResult& sr : result.samples) {
        nlohmann::ordered_json j;
        j["sample_id"] = sr.sample_id;
        j["gold"] = sr.gold;
        j["failed"] = sr.failed;
        if (sr.failed) {
            j["error"] = sr.error;
        } else {
            j["decision"] = sr.vote.decision;
            j["tie_broken"] = sr.vote.tie_broken;
            j["invalid_single"] = sr.invalid_single;
            j["yes_count"] = sr.vote.yes_count;
            j["no_count"] = sr.vote.no_count;
            j["invalid_count"] = sr.vote.invalid_count;
            j["outcomes"] = nlohmann::ordered_json::array();
            for (std::size_t i = 0; i < sr.outcomes.size(); ++i) {
                const char* value = sr.outcomes[i].value == Answer::yes      ? "yes"
                                    : sr.outcomes[i].value == Answer::no     ? "no"
                                                                             : "invalid";
                j["outcomes"].push_back({{"prompt_index", i + 1},
                                         {"answer", value},
                                         {"raw", sr.outcomes[i].raw_text}});
            }
        }
        out += j.dump();
        out += '\n';
    }
    return out;
}

namespace {

std::string pct(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", value);
    return buf;
}

}  // namespace

RenderedReport report_table(const std::vector<ReportRow>& rows) {
    RenderedReport report;
    std::ostringstream text;
    std::ostringstream csv;
    csv << "model,precision,recall,f1\n";

    std::size_t name_width = 5;
    for (const ReportRow& row : rows) {
        name_width = std::max(name_width, row.name.size());
    }
    text << "model";
    text << std::string(name_width - 5, ' ');
    text << "  precision  recall      f1\n";
    for (const ReportRow& row : rows) {
        const double computed = f1_score(row.precision, row.recall);
        char line[160];
        std::snprintf(line, sizeof(line), "%-*s  %9.1f  %6.1f  %6.1f",
                      static_cast<int>(name_width), row.name.c_str(), row.precision, row.recall,
                      computed);
        text << line;
        if (row.reported_f1 && std::abs(*row.reported_f1 - computed) >= 1.0) {
            std::string flag = row.name + ": reported F1 " + pct(*row.reported_f1) +
                               " is inconsistent with precision/recall (computed " +
                               pct(computed) + ")";
            report.flags.push_back(flag);
            text << "  [!] inconsistent reported F1 " << pct(*row.reported_f1);
        }
        text << "\n";
        csv << row.name << "," << pct(row.precision) << "," << pct(row.recall) << ","
            << pct(computed) << "\n";
    }
    report.text = text.str();
    report.csv = csv.str();
    return report;
}

}  // namespace hazardkit::rulevqa
