#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxyworld/image.hpp"

namespace pw::agent {

struct AgentUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AgentInvalidLabel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AgentReply {
    std::string content;     // labels / id / prompt / "clip:volume" pairs
    std::string transcript;  // raw exchange for the audit log
};

// The world-modeling agent surface: cell selection (coarse and fine),
// template retrieval, prompt design, ambient audio choice. Implementations
// must be deterministic for replayable pipelines.
class WorldAgent {
public:
    virtual ~WorldAgent() = default;

    // Picks coarse cells from the offered (non-excluded) labels; the agent
    // decides the count within [count_min, count_max].
    virtual AgentReply choose_cells(const Image& annotated, const std::string& context,
                                    const std::vector<std::string>& offered, int count_min,
                                    int count_max) = 0;
    virtual AgentReply choose_subcell(const Image& crop, const std::string& context,
                                      const std::vector<std::string>& offered) = 0;
    virtual AgentReply choose_template(const std::string& scene_context,
                                       const std::vector<std::string>& ids,
                                       const std::vector<std::string>& tag_lines) = 0;
    virtual AgentReply design_prompt(const std::string& scene_context,
                                     const std::string& template_caption,
                                     const std::string& template_tags) = 0;
    // Returns "clip_id:volume" pairs, comma separated, at most `max_tracks`.
    virtual AgentReply choose_audio(const std::string& scene_tags,
                                    const std::vector<std::string>& clip_ids,
                                    const std::vector<std::string>& clip_tag_lines,
                                    int max_tracks) = 0;
};

// Deterministic offline agent. Explicit choices come from a JSON policy file;
// anything not scripted falls back to a seeded policy (uniform cell picks,
// keyword-overlap scoring), so a fixed (policy, seed) replays exactly.
class ScriptedAgent : public WorldAgent {
public:
    ScriptedAgent() = default;
    explicit ScriptedAgent(uint64_t seed) : seed_(seed) {}
    static ScriptedAgent from_policy_file(const std::string& path);

    AgentReply choose_cells(const Image& annotated, const std::string& context,
                            const std::vector<std::string>& offered, int count_min,
                            int count_max) override;
    AgentReply choose_subcell(const Image& crop, const std::string& context,
                              const std::vector<std::string>& offered) override;
    AgentReply choose_template(const std::string& scene_context,
                               const std::vector<std::string>& ids,
                               const std::vector<std::string>& tag_lines) override;
    AgentReply design_prompt(const std::string& scene_context,
                             const std::string& template_caption,
                             const std::string& template_tags) override;
    AgentReply choose_audio(const std::string& scene_tags, const std::vector<std::string>& clip_ids,
                            const std::vector<std::string>& clip_tag_lines,
                            int max_tracks) override;

    // Scripted count override for the arranger ([min,max] clamp applied there).
    int asset_count(int fallback) const { return asset_count_ > 0 ? asset_count_ : fallback; }

private:
    uint64_t seed_ = 1;
    uint64_t step_ = 0;  // advances per call; makes the fallback sequence deterministic
    std::vector<std::string> coarse_cells_;
    size_t coarse_used_ = 0;
    std::vector<std::string> fine_cells_;
    size_t fine_used_ = 0;
    std::string template_choice_;
    std::string prompt_template_;
    std::string audio_choice_;
    int asset_count_ = -1;
};

// Remote VLM agent over the generative wire protocol with kind="agent_*";
// replies carry a text field. One retry, then AgentUnavailable.
class RemoteAgent : public WorldAgent {
public:
    explicit RemoteAgent(std::string base_url, int timeout_seconds = 300);

    AgentReply choose_cells(const Image& annotated, const std::string& context,
                            const std::vector<std::string>& offered, int count_min,
                            int count_max) override;
    AgentReply choose_subcell(const Image& crop, const std::string& context,
                              const std::vector<std::string>& offered) override;
    AgentReply choose_template(const std::string& scene_context,
                               const std::vector<std::string>& ids,
                               const std::vector<std::string>& tag_lines) override;
    AgentReply design_prompt(const std::string& scene_context,
                             const std::string& template_caption,
                             const std::string& template_tags) override;
    AgentReply choose_audio(const std::string& scene_tags, const std::vector<std::string>& clip_ids,
                            const std::vector<std::string>& clip_tag_lines,
                            int max_tracks) override;

private:
    AgentReply ask(const std::string& kind, const std::string& prompt, const Image* image);

    std::string base_url_;
    int timeout_seconds_;
};

// Shared keyword-overlap scorer: |query_words ∩ tags| normalized by query
// size; ties broken by id. Used by the scripted agent and as the fallback
// when a remote reply fails validation.
int keyword_argmax(const std::string& context, const std::vector<std::string>& ids,
                   const std::vector<std::string>& tag_lines);

std::vector<std::string> split_words(const std::string& text);

}  // namespace pw::agent
