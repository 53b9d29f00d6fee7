#include "proxyworld/immersion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "proxyworld/geometry.hpp"

namespace pw::immersion {

double tileable_value_noise(uint64_t seed, double x, double y, int period) {
    const auto fade = [](double t) { return t * t * (3.0 - 2.0 * t); };
    const double fx = x * period;
    const double fy = y * period;
    const int ix = static_cast<int>(std::floor(fx));
    const int iy = static_cast<int>(std::floor(fy));
    const double tx = fade(fx - ix);
    const double ty = fade(fy - iy);
    auto lattice = [&](int gx, int gy) {
        return hash_unit(seed, ((gx % period) + period) % period,
                         ((gy % period) + period) % period);
    };
    const double a = lattice(ix, iy);
    const double b = lattice(ix + 1, iy);
    const double c = lattice(ix, iy + 1);
    const double d = lattice(ix + 1, iy + 1);
    return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

Image gen_cloud_noise(uint64_t seed, int resolution, int base_frequency) {
    if (resolution <= 0 || (resolution & (resolution - 1)) != 0)
        throw std::runtime_error("gen_cloud_noise: resolution must be a power of two");
    Image out(resolution, resolution, 2);
    const uint64_t low_seed = hash_combine(seed, 0xc10d5ull);
    const uint64_t high_seed = hash_combine(seed, 0xde7a11ull);
    for (int y = 0; y < resolution; ++y) {
        for (int x = 0; x < resolution; ++x) {
            const double u = static_cast<double>(x) / resolution;
            const double v = static_cast<double>(y) / resolution;
            out.at(x, y, 0) = static_cast<float>(tileable_value_noise(low_seed, u, v, base_frequency));
            out.at(x, y, 1) =
                static_cast<float>(tileable_value_noise(high_seed, u, v, 8 * base_frequency));
        }
    }
    return out;
}

RainMaps gen_rain_maps(uint64_t seed, int resolution, double drop_density) {
    if (drop_density < 0.0) throw std::runtime_error("gen_rain_maps: density must be >= 0");
    RainMaps maps;
    maps.depth_bands = Image(resolution, resolution, 3, 0.0f);
    maps.alpha = Image(resolution, resolution, 1, 0.0f);
    maps.normal = Image(resolution, resolution, 3, 0.0f);
    for (int y = 0; y < resolution; ++y)
        for (int x = 0; x < resolution; ++x) {
            maps.normal.at(x, y, 0) = 0.5f;
            maps.normal.at(x, y, 1) = 0.5f;
            maps.normal.at(x, y, 2) = 1.0f;
        }

    const int drops = static_cast<int>(std::lround(drop_density * resolution * resolution / 1024.0));
    Rng rng(hash_combine(seed, 0x4a11ull));
    for (int d = 0; d < drops; ++d) {
        const double cx = rng.next_double() * resolution;
        const double cy = rng.next_double() * resolution;
        const double depth_m = rng.next_double() * 15.0;
        const int band = depth_m < 5.0 ? 0 : (depth_m < 10.0 ? 1 : 2);
        // nearer drops draw larger
        const double len = (3.0 + 5.0 * rng.next_double()) * (1.5 - depth_m / 15.0);
        const double half_w = std::max(0.6, len * 0.18);

        const int x0 = static_cast<int>(std::floor(cx - half_w - 1));
        const int x1 = static_cast<int>(std::ceil(cx + half_w + 1));
        const int y0 = static_cast<int>(std::floor(cy - len - 1));
        const int y1 = static_cast<int>(std::ceil(cy + len + 1));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const int px = ((x % resolution) + resolution) % resolution;
                const int py = ((y % resolution) + resolution) % resolution;
                // spindle: elliptical profile pinched at both ends
                const double dx = (x + 0.5 - cx) / half_w;
                const double dy = (y + 0.5 - cy) / len;
                const double r2 = dx * dx + dy * dy;
                if (r2 >= 1.0) continue;
                // a texel belongs to exactly one band; first drop wins
                bool other_band = false;
                for (int c = 0; c < 3; ++c)
                    if (c != band && maps.depth_bands.at(px, py, c) > 0.0f) other_band = true;
                if (other_band) continue;
                const float body = static_cast<float>(1.0 - r2);
                maps.depth_bands.at(px, py, band) =
                    std::max(maps.depth_bands.at(px, py, band), body);
                maps.alpha.at(px, py, 0) = std::max(maps.alpha.at(px, py, 0), body);
                maps.normal.at(px, py, 0) = static_cast<float>(0.5 - 0.5 * dx * body);
                maps.normal.at(px, py, 1) = static_cast<float>(0.5 - 0.5 * dy * body);
            }
        }
    }
    return maps;
}

namespace {

struct RippleLayer {
    double frequency;  // cycles over r in [0,1]
    double weight;
    double phase;
};

constexpr RippleLayer kLayers[4] = {
    {1.0, 0.4, 0.0},
    {1.5, 0.3, 1.1},
    {2.0, 0.2, 2.3},
    {2.5, 0.1, 4.0},
};

}  // namespace

double ripple_profile(double r) {
    double acc = 0.0;
    for (const RippleLayer& l : kLayers)
        acc += l.weight * std::sin(kTwoPi * l.frequency * r + l.phase);
    return acc * std::exp(-kRippleDecay * r);
}

double ripple_profile_dr(double r) {
    double osc = 0.0;
    double osc_dr = 0.0;
    for (const RippleLayer& l : kLayers) {
        osc += l.weight * std::sin(kTwoPi * l.frequency * r + l.phase);
        osc_dr += l.weight * kTwoPi * l.frequency * std::cos(kTwoPi * l.frequency * r + l.phase);
    }
    return (osc_dr - kRippleDecay * osc) * std::exp(-kRippleDecay * r);
}

double ripple_envelope(double r) {
    double total = 0.0;
    for (const RippleLayer& l : kLayers) total += std::abs(l.weight);
    return total * std::exp(-kRippleDecay * r);
}

RippleMap gen_ripple_map(int resolution) {
    if (resolution < 64) throw std::runtime_error("gen_ripple_map: resolution must be >= 64");
    RippleMap map;
    map.rgba = Image(resolution, resolution, 4);

    // max |d profile / dr| over [0,1], sampled; used to scale gradients into [0,1]
    double max_grad = 1e-9;
    for (int i = 0; i <= 4096; ++i)
        max_grad = std::max(max_grad, std::abs(ripple_profile_dr(i / 4096.0)));
    map.gradient_scale = max_grad;

    const double half = resolution / 2.0;
    for (int y = 0; y < resolution; ++y) {
        for (int x = 0; x < resolution; ++x) {
            const double dx = (x + 0.5 - half) / half;
            const double dy = (y + 0.5 - half) / half;
            const double r = std::sqrt(dx * dx + dy * dy);
            const double rc = std::min(r, 1.0);
            const double dpdr = ripple_profile_dr(rc);
            double gx = 0.0, gy = 0.0;
            if (r > 1e-9) {
                gx = dpdr * (dx / r);
                gy = dpdr * (dy / r);
            }
            map.rgba.at(x, y, 0) = static_cast<float>(rc);
            map.rgba.at(x, y, 1) = static_cast<float>(0.5 + 0.5 * gx / max_grad);
            map.rgba.at(x, y, 2) = static_cast<float>(0.5 + 0.5 * gy / max_grad);
            map.rgba.at(x, y, 3) = static_cast<float>(rc - std::floor(rc));
        }
    }
    return map;
}

std::vector<AudioSelection> select_ambient(agent::WorldAgent& agent, const std::string& scene_tags,
                                           const std::vector<audio::AudioClip>& library) {
    if (library.empty()) throw std::runtime_error("select_ambient: audio library is empty");
    std::vector<std::string> ids;
    std::vector<std::string> tag_lines;
    for (const audio::AudioClip& clip : library) {
        ids.push_back(clip.id);
        std::string tags;
        for (const std::string& t : clip.tags) tags += t + " ";
        tag_lines.push_back(tags);
    }

    std::string content;
    try {
        content = agent.choose_audio(scene_tags, ids, tag_lines, 3).content;
    } catch (const agent::AgentUnavailable&) {
        agent::ScriptedAgent fallback(1);
        content = fallback.choose_audio(scene_tags, ids, tag_lines, 3).content;
    }

    std::vector<AudioSelection> out;
    std::map<std::string, const audio::AudioClip*> by_id;
    for (const audio::AudioClip& clip : library) by_id[clip.id] = &clip;
    std::set<std::string> seen;
    std::istringstream ss(content);
    std::string token;
    while (std::getline(ss, token, ',') && out.size() < 3) {
        const size_t colon = token.rfind(':');
        std::string id = colon == std::string::npos ? token : token.substr(0, colon);
        double volume = 1.0;
        if (colon != std::string::npos) {
            try {
                volume = std::stod(token.substr(colon + 1));
            } catch (const std::exception&) {
                volume = 1.0;
            }
        }
        id.erase(std::remove_if(id.begin(), id.end(),
                                [](char c) { return std::isspace(static_cast<unsigned char>(c)); }),
                 id.end());
        if (id.empty() || seen.count(id) || !by_id.count(id)) continue;
        seen.insert(id);
        volume = std::clamp(volume, 0.05, 1.0);
        out.push_back({by_id.at(id), volume});
    }
    if (out.empty()) out.push_back({&library.front(), 0.5});
    return out;
}

}  // namespace pw::immersion
