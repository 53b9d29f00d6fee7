#include "proxyworld/agents.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "proxyworld/geometry.hpp"

namespace pw::agent {

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    std::string word;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!word.empty()) {
            out.push_back(word);
            word.clear();
        }
    }
    if (!word.empty()) out.push_back(word);
    return out;
}

int keyword_argmax(const std::string& context, const std::vector<std::string>& ids,
                   const std::vector<std::string>& tag_lines) {
    const std::vector<std::string> query = split_words(context);
    int best = -1;
    double best_score = -1.0;
    for (size_t i = 0; i < ids.size(); ++i) {
        const std::vector<std::string> tags = split_words(tag_lines[i]);
        const std::set<std::string> tag_set(tags.begin(), tags.end());
        double score = 0.0;
        if (!query.empty()) {
            const std::set<std::string> qset(query.begin(), query.end());
            int overlap = 0;
            for (const std::string& q : qset) overlap += tag_set.count(q) ? 1 : 0;
            score = static_cast<double>(overlap) / static_cast<double>(qset.size());
        }
        if (score > best_score ||
            (score == best_score && best >= 0 && ids[i] < ids[best])) {
            best = static_cast<int>(i);
            best_score = score;
        }
    }
    return best;
}

ScriptedAgent ScriptedAgent::from_policy_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw AgentUnavailable("cannot open agent policy file: " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    ScriptedAgent agent;
    agent.seed_ = j.value("seed", 1ull);
    if (j.contains("coarse_cells"))
        for (const auto& c : j.at("coarse_cells")) agent.coarse_cells_.push_back(c.get<std::string>());
    if (j.contains("fine_cells"))
        for (const auto& c : j.at("fine_cells")) agent.fine_cells_.push_back(c.get<std::string>());
    agent.template_choice_ = j.value("template", "");
    agent.prompt_template_ = j.value("prompt_template", "");
    agent.audio_choice_ = j.value("audio", "");
    agent.asset_count_ = j.value("asset_count", -1);
    return agent;
}

AgentReply ScriptedAgent::choose_cells(const Image&, const std::string& context,
                                       const std::vector<std::string>& offered, int count_min,
                                       int count_max) {
    int count = asset_count_ > 0 ? std::clamp(asset_count_, count_min, count_max) : 0;
    if (count == 0) {
        Rng rng(hash_combine(seed_ ^ 0xc0a45e, ++step_));
        count = static_cast<int>(rng.next_int(count_min, count_max));
    }
    std::vector<std::string> picks;
    std::ostringstream transcript;
    transcript << "choose_cells(context=" << context << ", offered=" << offered.size()
               << ", count=" << count << ") -> ";
    for (int i = 0; i < count; ++i) {
        if (coarse_used_ < coarse_cells_.size()) {
            picks.push_back(coarse_cells_[coarse_used_++]);
        } else if (!offered.empty()) {
            Rng rng(hash_combine(seed_, ++step_));
            picks.push_back(offered[rng.next_int(0, static_cast<int64_t>(offered.size()) - 1)]);
        }
    }
    std::string joined;
    for (const std::string& p : picks) {
        if (!joined.empty()) joined += ",";
        joined += p;
    }
    transcript << joined;
    return {joined, transcript.str()};
}

AgentReply ScriptedAgent::choose_subcell(const Image&, const std::string& context,
                                         const std::vector<std::string>& offered) {
    std::string pick;
    if (fine_used_ < fine_cells_.size()) {
        pick = fine_cells_[fine_used_++];
    } else if (!offered.empty()) {
        Rng rng(hash_combine(seed_ ^ 0xf17e, ++step_));
        pick = offered[rng.next_int(0, static_cast<int64_t>(offered.size()) - 1)];
    }
    return {pick, "choose_subcell(context=" + context + ") -> " + pick};
}

AgentReply ScriptedAgent::choose_template(const std::string& scene_context,
                                          const std::vector<std::string>& ids,
                                          const std::vector<std::string>& tag_lines) {
    std::string pick;
    if (!template_choice_.empty()) {
        pick = template_choice_;
    } else {
        const int best = keyword_argmax(scene_context, ids, tag_lines);
        if (best >= 0) pick = ids[best];
    }
    return {pick, "choose_template(context=" + scene_context + ") -> " + pick};
}

AgentReply ScriptedAgent::design_prompt(const std::string& scene_context,
                                        const std::string& template_caption,
                                        const std::string& template_tags) {
    std::string prompt;
    if (!prompt_template_.empty()) {
        prompt = prompt_template_;
        const size_t pos = prompt.find("{caption}");
        if (pos != std::string::npos) prompt.replace(pos, 9, template_caption);
    } else {
        prompt = template_caption;
        if (!template_tags.empty()) prompt += ", " + template_tags;
        if (!scene_context.empty()) prompt += ", set in " + scene_context;
        prompt += ", summer season, natural photographic style";
    }
    return {prompt, "design_prompt -> " + prompt};
}

AgentReply ScriptedAgent::choose_audio(const std::string& scene_tags,
                                       const std::vector<std::string>& clip_ids,
                                       const std::vector<std::string>& clip_tag_lines,
                                       int max_tracks) {
    if (!audio_choice_.empty()) return {audio_choice_, "choose_audio -> " + audio_choice_};
    // keyword scorer: clips sharing words with the scene tags, ranked by
    // (score desc, id asc); volume rises with relative score
    const std::vector<std::string> query = split_words(scene_tags);
    const std::set<std::string> qset(query.begin(), query.end());
    std::vector<std::pair<double, size_t>> scored;
    for (size_t i = 0; i < clip_ids.size(); ++i) {
        const std::vector<std::string> tags = split_words(clip_tag_lines[i]);
        const std::set<std::string> tset(tags.begin(), tags.end());
        int overlap = 0;
        for (const std::string& q : qset) overlap += tset.count(q) ? 1 : 0;
        if (overlap > 0)
            scored.push_back({static_cast<double>(overlap) / std::max<size_t>(1, qset.size()), i});
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return clip_ids[a.second] < clip_ids[b.second];
    });
    if (scored.empty() && !clip_ids.empty()) {
        size_t first = 0;
        for (size_t i = 1; i < clip_ids.size(); ++i)
            if (clip_ids[i] < clip_ids[first]) first = i;
        scored.push_back({0.5, first});
    }
    if (static_cast<int>(scored.size()) > max_tracks) scored.resize(max_tracks);

    const double top = scored.empty() ? 1.0 : std::max(scored.front().first, 1e-9);
    std::string joined;
    for (const auto& [score, i] : scored) {
        if (!joined.empty()) joined += ",";
        const double volume = std::clamp(0.5 + 0.5 * score / top, 0.0, 1.0);
        std::ostringstream v;
        v.precision(3);
        v << std::fixed << volume;
        joined += clip_ids[i] + ":" + v.str();
    }
    return {joined, "choose_audio(tags=" + scene_tags + ") -> " + joined};
}

RemoteAgent::RemoteAgent(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

AgentReply RemoteAgent::ask(const std::string& kind, const std::string& prompt,
                            const Image* image) {
    nlohmann::json j;
    j["kind"] = kind;
    j["prompt"] = prompt;
    j["seed"] = 0;
    j["width"] = image ? image->width : 0;
    j["height"] = image ? image->height : 0;
    nlohmann::json conditions = nlohmann::json::object();
    if (image) conditions["image"] = base64_encode(encode_png(*image, 8));
    j["conditions"] = conditions;

    std::string reply;
    bool ok = false;
    for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
        httplib::Client client(base_url_);
        client.set_connection_timeout(timeout_seconds_, 0);
        client.set_read_timeout(timeout_seconds_, 0);
        auto res = client.Post("/generate", j.dump(), "application/json");
        if (res && res->status == 200) {
            reply = res->body;
            ok = true;
        }
    }
    if (!ok) throw AgentUnavailable("agent endpoint unreachable: " + base_url_);
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(reply);
    } catch (const std::exception&) {
        throw AgentUnavailable("agent reply is not valid JSON");
    }
    if (!parsed.contains("text")) throw AgentUnavailable("agent reply missing text field");
    const std::string text = parsed.at("text").get<std::string>();
    return {text, "remote " + kind + "(" + prompt + ") -> " + text};
}

AgentReply RemoteAgent::choose_cells(const Image& annotated, const std::string& context,
                                     const std::vector<std::string>& offered, int count_min,
                                     int count_max) {
    std::string prompt = "Pick between " + std::to_string(count_min) + " and " +
                         std::to_string(count_max) +
                         " grid cells for asset placement. Context: " + context + ". Offered:";
    for (const std::string& label : offered) prompt += " " + label;
    return ask("agent_choose_cells", prompt, &annotated);
}

AgentReply RemoteAgent::choose_subcell(const Image& crop, const std::string& context,
                                       const std::vector<std::string>& offered) {
    std::string prompt = "Pick one sub-cell. Context: " + context + ". Offered:";
    for (const std::string& label : offered) prompt += " " + label;
    return ask("agent_choose_subcell", prompt, &crop);
}

AgentReply RemoteAgent::choose_template(const std::string& scene_context,
                                        const std::vector<std::string>& ids,
                                        const std::vector<std::string>& tag_lines) {
    std::string prompt = "Pick one template id for scene: " + scene_context + ". Options:";
    for (size_t i = 0; i < ids.size(); ++i) prompt += " " + ids[i] + "(" + tag_lines[i] + ")";
    return ask("agent_choose_template", prompt, nullptr);
}

AgentReply RemoteAgent::design_prompt(const std::string& scene_context,
                                      const std::string& template_caption,
                                      const std::string& template_tags) {
    return ask("agent_design_prompt",
               "Write a texture prompt. Scene: " + scene_context + ". Template: " +
                   template_caption + " (" + template_tags + ")",
               nullptr);
}

AgentReply RemoteAgent::choose_audio(const std::string& scene_tags,
                                     const std::vector<std::string>& clip_ids,
                                     const std::vector<std::string>& clip_tag_lines,
                                     int max_tracks) {
    std::string prompt = "Pick up to " + std::to_string(max_tracks) +
                         " ambient clips as id:volume pairs. Scene tags: " + scene_tags +
                         ". Clips:";
    for (size_t i = 0; i < clip_ids.size(); ++i)
        prompt += " " + clip_ids[i] + "(" + clip_tag_lines[i] + ")";
    return ask("agent_choose_audio", prompt, nullptr);
}

}  // namespace pw::agent
