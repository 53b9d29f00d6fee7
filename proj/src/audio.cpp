#include "proxyworld/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace pw::audio {

double AudioClip::rms() const {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (float s : samples) acc += static_cast<double>(s) * s;
    return std::sqrt(acc / samples.size());
}

namespace {

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
    b.push_back(v & 0xff);
    b.push_back((v >> 8) & 0xff);
    b.push_back((v >> 16) & 0xff);
    b.push_back((v >> 24) & 0xff);
}
void put_u16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(v & 0xff);
    b.push_back((v >> 8) & 0xff);
}

void save_wav(const std::string& path, const AudioClip& clip, bool float32) {
    const uint16_t format = float32 ? 3 : 1;
    const uint16_t bits = float32 ? 32 : 16;
    const uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * (bits / 8));
    std::vector<uint8_t> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, format);
    put_u16(out, static_cast<uint16_t>(clip.channels));
    put_u32(out, static_cast<uint32_t>(clip.sample_rate));
    put_u32(out, static_cast<uint32_t>(clip.sample_rate * clip.channels * (bits / 8)));
    put_u16(out, static_cast<uint16_t>(clip.channels * (bits / 8)));
    put_u16(out, bits);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_bytes);
    for (float s : clip.samples) {
        const float c = std::clamp(s, -1.0f, 1.0f);
        if (float32) {
            uint32_t bitsrep;
            std::memcpy(&bitsrep, &c, 4);
            put_u32(out, bitsrep);
        } else {
            put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(std::lround(c * 32767.0f))));
        }
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("wav: cannot open for write " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

}  // namespace

void save_wav_pcm16(const std::string& path, const AudioClip& clip) { save_wav(path, clip, false); }
void save_wav_float32(const std::string& path, const AudioClip& clip) { save_wav(path, clip, true); }

AudioClip load_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("wav: cannot open " + path);
    std::vector<uint8_t> b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (b.size() < 44 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
        std::memcmp(b.data() + 8, "WAVE", 4) != 0)
        throw std::runtime_error("wav: not a RIFF/WAVE file: " + path);

    auto u16 = [&](size_t o) { return static_cast<uint16_t>(b[o] | (b[o + 1] << 8)); };
    auto u32 = [&](size_t o) {
        return static_cast<uint32_t>(b[o] | (b[o + 1] << 8) | (b[o + 2] << 16) | (b[o + 3] << 24));
    };

    AudioClip clip;
    uint16_t format = 0, bits = 0;
    size_t pos = 12;
    bool got_data = false;
    while (pos + 8 <= b.size()) {
        const uint32_t chunk_size = u32(pos + 4);
        if (std::memcmp(b.data() + pos, "fmt ", 4) == 0) {
            format = u16(pos + 8);
            clip.channels = u16(pos + 10);
            clip.sample_rate = static_cast<int>(u32(pos + 12));
            bits = u16(pos + 22);
        } else if (std::memcmp(b.data() + pos, "data", 4) == 0) {
            const size_t begin = pos + 8;
            const size_t end = std::min(b.size(), begin + chunk_size);
            if (format == 1 && bits == 16) {
                for (size_t o = begin; o + 1 < end; o += 2) {
                    const int16_t v = static_cast<int16_t>(u16(o));
                    clip.samples.push_back(static_cast<float>(v) / 32767.0f);
                }
            } else if (format == 3 && bits == 32) {
                for (size_t o = begin; o + 3 < end; o += 4) {
                    const uint32_t v = u32(o);
                    float s;
                    std::memcpy(&s, &v, 4);
                    clip.samples.push_back(s);
                }
            } else {
                throw std::runtime_error("wav: unsupported format in " + path);
            }
            got_data = true;
        }
        pos += 8 + chunk_size + (chunk_size & 1);
    }
    if (!got_data) throw std::runtime_error("wav: no data chunk in " + path);
    for (float& s : clip.samples) s = std::clamp(s, -1.0f, 1.0f);
    return clip;
}

AudioClip crossfade_loop(const AudioClip& clip, double fade_seconds) {
    const size_t frames = clip.frame_count();
    const size_t fade = static_cast<size_t>(std::llround(fade_seconds * clip.sample_rate));
    if (clip.duration_seconds() <= 2.0 * fade_seconds)
        throw ClipTooShort("clip must be longer than twice the fade");
    AudioClip out = clip;
    if (fade == 0) return out;

    const size_t keep = frames - fade;
    out.samples.resize(keep * clip.channels);
    // head[i] = tail + w*(head - tail), w ramping 0 -> 1: the loop point
    // continues the faded-out tail exactly.
    for (size_t i = 0; i < fade; ++i) {
        const float w = static_cast<float>(i) / static_cast<float>(fade);
        for (int c = 0; c < clip.channels; ++c) {
            const float head = clip.samples[i * clip.channels + c];
            const float tail = clip.samples[(keep + i) * clip.channels + c];
            out.samples[i * clip.channels + c] = tail + w * (head - tail);
        }
    }
    return out;
}

AudioClip mix_tracks(const std::vector<std::pair<const AudioClip*, double>>& selections,
                     double loop_fade_seconds) {
    if (selections.empty()) throw std::runtime_error("mix_tracks: nothing to mix");
    if (selections.size() > 3) throw std::runtime_error("mix_tracks: at most 3 tracks");
    const int rate = selections.front().first->sample_rate;
    const int channels = selections.front().first->channels;
    for (const auto& [clip, volume] : selections) {
        if (clip->sample_rate != rate) throw SampleRateMismatch();
        if (clip->channels != channels)
            throw std::runtime_error("mix_tracks: channel count mismatch");
        (void)volume;
    }

    size_t longest = 0;
    for (const auto& [clip, _] : selections) longest = std::max(longest, clip->frame_count());

    AudioClip out;
    out.sample_rate = rate;
    out.channels = channels;
    out.samples.assign(longest * channels, 0.0f);

    for (const auto& [clip, volume] : selections) {
        const AudioClip* source = clip;
        AudioClip looped;
        if (clip->frame_count() < longest) {
            const double fade = std::min(loop_fade_seconds, clip->duration_seconds() / 4.0);
            looped = crossfade_loop(*clip, fade);
            source = &looped;
        }
        const size_t src_frames = source->frame_count();
        for (size_t i = 0; i < longest; ++i) {
            const size_t j = i % src_frames;
            for (int c = 0; c < channels; ++c)
                out.samples[i * channels + c] +=
                    static_cast<float>(volume) * source->samples[j * channels + c];
        }
    }
    for (float& s : out.samples)
        if (s > 1.0f || s < -1.0f) s = std::tanh(s);
    return out;
}

}  // namespace pw::audio
