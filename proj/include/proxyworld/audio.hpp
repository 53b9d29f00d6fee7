#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace pw::audio {

struct ClipTooShort : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SampleRateMismatch : std::runtime_error {
    SampleRateMismatch() : std::runtime_error("clips have different sample rates") {}
};

struct AudioClip {
    int sample_rate = 44100;
    int channels = 1;
    std::vector<float> samples;  // interleaved, in [-1,1]
    std::set<std::string> tags;
    std::string id;

    double duration_seconds() const {
        return channels > 0 && sample_rate > 0
                   ? static_cast<double>(samples.size() / channels) / sample_rate
                   : 0.0;
    }
    size_t frame_count() const { return channels > 0 ? samples.size() / channels : 0; }
    double rms() const;
};

// WAV I/O: PCM16 (format 1) and float32 (format 3).
AudioClip load_wav(const std::string& path);
void save_wav_pcm16(const std::string& path, const AudioClip& clip);
void save_wav_float32(const std::string& path, const AudioClip& clip);

// Shortens the clip by `fade` seconds and linearly crossfades the removed
// tail onto the head, so looping the result is click-free. A constant signal
// passes through exactly.
AudioClip crossfade_loop(const AudioClip& clip, double fade_seconds);

// Sample-wise weighted sum; shorter clips are loop-extended via
// crossfade_loop. Sums beyond [-1,1] are soft-clipped through tanh.
AudioClip mix_tracks(const std::vector<std::pair<const AudioClip*, double>>& selections,
                     double loop_fade_seconds = 0.5);

}  // namespace pw::audio
