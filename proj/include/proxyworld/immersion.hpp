#pragma once

#include <string>
#include <vector>

#include "proxyworld/agents.hpp"
#include "proxyworld/audio.hpp"
#include "proxyworld/image.hpp"

namespace pw::immersion {

// Cloud motion texture: R = low-frequency value noise (base frequency f0),
// G = high-frequency detail at 8*f0. Both periodic, so the texture tiles.
Image gen_cloud_noise(uint64_t seed, int resolution, int base_frequency = 4);

// Periodic value noise sample at (x,y) in [0,1); exposed for the tiling test.
double tileable_value_noise(uint64_t seed, double x, double y, int period);

struct RainMaps {
    Image depth_bands;  // RGB: drops bucketed 0-5m / 5-10m / 10-15m
    Image alpha;        // drop silhouettes
    Image normal;       // per-drop refraction gradient, RG biased around 0.5
};

// Spindle-shaped drop sprites, each assigned to exactly one band channel by
// its sampled depth; band channels are mutually exclusive per texel.
RainMaps gen_rain_maps(uint64_t seed, int resolution, double drop_density);

struct RippleMap {
    Image rgba;  // R radial distance, GB gradient of the ring profile, A time offset
    double gradient_scale = 1.0;  // world-units gradient per encoded unit
};

RippleMap gen_ripple_map(int resolution);

// Reference ripple evaluator for tests: four superposed rings with
// exponential decay exp(-k r).
double ripple_profile(double r);
double ripple_profile_dr(double r);
double ripple_envelope(double r);
constexpr double kRippleDecay = 2.0;

// Per-effect export descriptor; textures are written by the export stage and
// referenced by name in the manifest.
struct EffectDescriptor {
    std::string effect;  // "cloud" | "rain" | "ripple"
    std::vector<std::pair<std::string, std::string>> textures;  // role -> file
    double flow_dir_x = 1.0, flow_dir_y = 0.25;
    double speed = 1.0;
    std::vector<double> layer_speeds{1.0, 0.6, 0.35};
    std::string target;  // scene node
};

struct AudioSelection {
    const audio::AudioClip* clip = nullptr;
    double volume = 1.0;
};

// Agent (or stub keyword scorer) picks up to three clips with volumes in
// (0,1]; duplicates are forbidden.
std::vector<AudioSelection> select_ambient(agent::WorldAgent& agent,
                                           const std::string& scene_tags,
                                           const std::vector<audio::AudioClip>& library);

}  // namespace pw::immersion
