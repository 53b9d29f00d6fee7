#include "proxyworld/arranger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "proxyworld/erp.hpp"
#include "proxyworld/gltf.hpp"

namespace pw::arrange {

namespace {

// 5x7 bitmap font, rows top-down, 5 bits per row. Digits then A-Z.
constexpr uint8_t kFont[36][7] = {
    {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}, {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e},
    {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}, {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e},
    {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}, {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e},
    {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}, {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
    {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}, {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c},
    {0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}, {0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e},
    {0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e}, {0x1c, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1c},
    {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f}, {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10},
    {0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f}, {0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11},
    {0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c},
    {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f},
    {0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
    {0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}, {0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10},
    {0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d}, {0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11},
    {0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e}, {0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04},
    {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0a}, {0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11},
    {0x11, 0x11, 0x11, 0x0a, 0x04, 0x04, 0x04}, {0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f},
};

int glyph_index(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'Z') return 10 + c - 'A';
    return -1;
}

void draw_text(Image& img, int x0, int y0, const std::string& text, float value) {
    int pen = x0;
    for (char c : text) {
        const int g = glyph_index(c);
        if (g >= 0) {
            for (int row = 0; row < 7; ++row) {
                for (int col = 0; col < 5; ++col) {
                    if (!(kFont[g][row] & (1 << (4 - col)))) continue;
                    const int x = pen + col;
                    const int y = y0 + row;
                    if (x < 0 || x >= img.width || y < 0 || y >= img.height) continue;
                    for (int ch = 0; ch < img.channels; ++ch) img.at(x, y, ch) = value;
                }
            }
        }
        pen += 6;
    }
}

std::string column_letters(int col) {
    std::string out;
    int c = col;
    while (true) {
        out.insert(out.begin(), static_cast<char>('A' + c % 26));
        c = c / 26 - 1;
        if (c < 0) break;
    }
    return out;
}

}  // namespace

std::string cell_label(int col, int row) { return column_letters(col) + std::to_string(row + 1); }

bool parse_label(const std::string& label, int cols, int rows, int& col, int& row) {
    size_t i = 0;
    int c = 0;
    while (i < label.size() && label[i] >= 'A' && label[i] <= 'Z') {
        c = c * 26 + (label[i] - 'A' + 1);
        ++i;
    }
    if (i == 0 || i >= label.size()) return false;
    c -= 1;
    int r = 0;
    for (; i < label.size(); ++i) {
        if (label[i] < '0' || label[i] > '9') return false;
        r = r * 10 + (label[i] - '0');
    }
    r -= 1;
    if (c < 0 || c >= cols || r < 0 || r >= rows) return false;
    col = c;
    row = r;
    return true;
}

CellRect cell_rect(const GridSpec& spec, int col, int row) {
    CellRect rect;
    rect.x0 = col * spec.image_w / spec.cols;
    rect.x1 = (col + 1) * spec.image_w / spec.cols;
    rect.y0 = row * spec.image_h / spec.rows;
    rect.y1 = (row + 1) * spec.image_h / spec.rows;
    return rect;
}

std::vector<uint8_t> excluded_cells(const GridSpec& spec) {
    std::vector<uint8_t> out(static_cast<size_t>(spec.cols) * spec.rows, 0);
    if (spec.suitability_mask.empty()) return out;
    for (int row = 0; row < spec.rows; ++row) {
        for (int col = 0; col < spec.cols; ++col) {
            const CellRect rect = cell_rect(spec, col, row);
            int masked = 0;
            int total = 0;
            for (int y = rect.y0; y < rect.y1; ++y)
                for (int x = rect.x0; x < rect.x1; ++x) {
                    ++total;
                    if (spec.suitability_mask.at(x, y, 0) > 0.5f) ++masked;
                }
            if (total > 0 && masked >= spec.mask_fraction * total)
                out[static_cast<size_t>(row) * spec.cols + col] = 1;
        }
    }
    return out;
}

Image annotate_grid(const Image& base, const GridSpec& spec) {
    if (base.width != spec.image_w || base.height != spec.image_h)
        throw std::runtime_error("annotate_grid: image dims disagree with spec");
    if (static_cast<int64_t>(spec.cols) * spec.rows > 676)
        throw std::runtime_error("annotate_grid: more than 676 cells");

    Image out(base.width, base.height, 3);
    for (int y = 0; y < base.height; ++y)
        for (int x = 0; x < base.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = base.at(x, y, std::min(c, base.channels - 1));

    const std::vector<uint8_t> excluded = excluded_cells(spec);
    for (int row = 0; row < spec.rows; ++row) {
        for (int col = 0; col < spec.cols; ++col) {
            if (!excluded[static_cast<size_t>(row) * spec.cols + col]) continue;
            const CellRect rect = cell_rect(spec, col, row);
            for (int y = rect.y0; y < rect.y1; ++y)
                for (int x = rect.x0; x < rect.x1; ++x)
                    for (int c = 0; c < 3; ++c) out.at(x, y, c) *= 0.35f;
        }
    }
    // grid lines
    for (int col = 0; col <= spec.cols; ++col) {
        const int x = std::min(col * spec.image_w / spec.cols, spec.image_w - 1);
        for (int y = 0; y < spec.image_h; ++y)
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = 0.9f;
    }
    for (int row = 0; row <= spec.rows; ++row) {
        const int y = std::min(row * spec.image_h / spec.rows, spec.image_h - 1);
        for (int x = 0; x < spec.image_w; ++x)
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = 0.9f;
    }
    for (int row = 0; row < spec.rows; ++row) {
        for (int col = 0; col < spec.cols; ++col) {
            const CellRect rect = cell_rect(spec, col, row);
            if (rect.x1 - rect.x0 < 16 || rect.y1 - rect.y0 < 11) continue;
            draw_text(out, rect.x0 + 3, rect.y0 + 3, cell_label(col, row), 1.0f);
        }
    }
    return out;
}

namespace {

GridSpec sub_spec(const GridSpec& spec, const CellRect& rect, int fine_div) {
    GridSpec fine;
    fine.cols = fine_div;
    fine.rows = fine_div;
    fine.image_w = rect.x1 - rect.x0;
    fine.image_h = rect.y1 - rect.y0;
    if (!spec.suitability_mask.empty()) {
        fine.suitability_mask = Image(fine.image_w, fine.image_h, 1);
        for (int y = 0; y < fine.image_h; ++y)
            for (int x = 0; x < fine.image_w; ++x)
                fine.suitability_mask.at(x, y, 0) =
                    spec.suitability_mask.at(rect.x0 + x, rect.y0 + y, 0);
    }
    fine.mask_fraction = 1.1;  // fine cells are never excluded; backprojection validates
    return fine;
}

Image crop_image(const Image& img, const CellRect& rect) {
    Image out(rect.x1 - rect.x0, rect.y1 - rect.y0, img.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(rect.x0 + x, rect.y0 + y, c);
    return out;
}

std::vector<std::string> parse_label_list(const std::string& content) {
    std::vector<std::string> out;
    std::string token;
    std::istringstream ss(content);
    while (std::getline(ss, token, ',')) {
        token.erase(std::remove_if(token.begin(), token.end(),
                                   [](char c) { return std::isspace(static_cast<unsigned char>(c)); }),
                    token.end());
        if (!token.empty()) out.push_back(token);
    }
    return out;
}

}  // namespace

std::vector<Lineage> propose_placements(agent::WorldAgent& agent, const Image& base,
                                        const GridSpec& spec, const std::string& context,
                                        int count_min, int count_max, int fine_div,
                                        std::vector<std::string>* warnings) {
    const Image annotated = annotate_grid(base, spec);
    const std::vector<uint8_t> excluded = excluded_cells(spec);

    std::vector<std::string> offered;
    for (int row = 0; row < spec.rows; ++row)
        for (int col = 0; col < spec.cols; ++col)
            if (!excluded[static_cast<size_t>(row) * spec.cols + col])
                offered.push_back(cell_label(col, row));
    if (offered.empty()) {
        if (warnings) warnings->push_back("all grid cells excluded by the suitability mask");
        return {};
    }

    agent::AgentReply reply = agent.choose_cells(annotated, context, offered, count_min, count_max);
    std::vector<std::string> picks = parse_label_list(reply.content);
    if (static_cast<int>(picks.size()) > count_max) picks.resize(count_max);

    auto is_valid_coarse = [&](const std::string& label, int& col, int& row) {
        return parse_label(label, spec.cols, spec.rows, col, row) &&
               !excluded[static_cast<size_t>(row) * spec.cols + col];
    };

    std::vector<Lineage> out;
    for (std::string label : picks) {
        int col = 0, row = 0;
        std::string transcript = reply.transcript;
        if (!is_valid_coarse(label, col, row)) {
            // one re-prompt for this slot, then reject
            agent::AgentReply retry =
                agent.choose_cells(annotated, context + " (replacement for invalid '" + label + "')",
                                   offered, 1, 1);
            transcript += "\n" + retry.transcript;
            const std::vector<std::string> replacement = parse_label_list(retry.content);
            if (replacement.empty() || !is_valid_coarse(replacement.front(), col, row)) {
                if (warnings)
                    warnings->push_back("rejected invalid coarse cell '" + label + "' after re-prompt");
                continue;
            }
            label = replacement.front();
        }

        const CellRect rect = cell_rect(spec, col, row);
        const GridSpec fine = sub_spec(spec, rect, fine_div);
        const Image crop = annotate_grid(crop_image(base, rect), fine);
        std::vector<std::string> fine_offered;
        for (int fr = 0; fr < fine_div; ++fr)
            for (int fc = 0; fc < fine_div; ++fc) fine_offered.push_back(cell_label(fc, fr));

        agent::AgentReply fine_reply = agent.choose_subcell(crop, context + " cell " + label,
                                                            fine_offered);
        transcript += "\n" + fine_reply.transcript;
        int fcol = 0, frow = 0;
        if (!parse_label(fine_reply.content, fine_div, fine_div, fcol, frow)) {
            agent::AgentReply retry = agent.choose_subcell(
                crop, context + " cell " + label + " (replacement)", fine_offered);
            transcript += "\n" + retry.transcript;
            if (!parse_label(retry.content, fine_div, fine_div, fcol, frow)) {
                if (warnings)
                    warnings->push_back("rejected invalid fine cell reply in coarse '" + label + "'");
                continue;
            }
        }

        Lineage lineage;
        lineage.coarse_cell = label;
        lineage.fine_cell = cell_label(fcol, frow);
        lineage.coarse_rect = rect;
        const CellRect local = cell_rect(fine, fcol, frow);
        lineage.fine_rect = {rect.x0 + local.x0, rect.y0 + local.y0, rect.x0 + local.x1,
                             rect.y0 + local.y1};
        lineage.transcript = std::move(transcript);
        out.push_back(std::move(lineage));
    }
    if (warnings && static_cast<int>(out.size()) < count_min)
        warnings->push_back("placement proposals below requested minimum: " +
                            std::to_string(out.size()) + " < " + std::to_string(count_min));
    return out;
}

PixelPos sample_point(const CellRect& bounds, uint64_t seed) {
    if (bounds.x1 <= bounds.x0 || bounds.y1 <= bounds.y0)
        throw std::runtime_error("sample_point: empty cell bounds");
    Rng rng(seed);
    PixelPos p;
    p.x = bounds.x0 + static_cast<int>(rng.next_int(0, bounds.x1 - bounds.x0 - 1));
    p.y = bounds.y0 + static_cast<int>(rng.next_int(0, bounds.y1 - bounds.y0 - 1));
    return p;
}

BackprojectResult backproject(PixelPos pixel, Vec3 origin, const TerrainMesh& terrain,
                              const TriBvh& bvh, const Image& suitability_mask) {
    if (!suitability_mask.empty() && suitability_mask.at(pixel.x, pixel.y, 0) > 0.5f)
        throw MaskedRegion();
    const Vec2 uv =
        erp::pixel_center_uv(pixel.x, pixel.y, suitability_mask.width, suitability_mask.height);
    const Ray ray{origin, erp::uv_to_dir(uv)};
    const RayHit hit = bvh.nearest(ray);
    if (!hit.valid()) throw NoHit();
    if (terrain.has_region_tags() && terrain.region_tags[hit.triangle] == Region::water)
        throw WaterHit();
    BackprojectResult out;
    out.world_point = ray.origin + ray.dir * hit.t;
    out.distance = hit.t;
    out.triangle = hit.triangle;
    return out;
}

Band classify_band(double distance, const BandRanges& ranges) {
    if (distance >= ranges.fg_min && distance <= ranges.fg_max) return Band::foreground;
    if (distance >= ranges.mg_min && distance <= ranges.mg_max) return Band::midground;
    return Band::out_of_band;
}

const char* band_name(Band b) {
    switch (b) {
        case Band::foreground: return "foreground";
        case Band::midground: return "midground";
        case Band::out_of_band: return "out_of_band";
    }
    return "unknown";
}

std::vector<AssetTemplate> load_asset_library(const std::string& index_json_path) {
    std::ifstream f(index_json_path);
    if (!f) throw std::runtime_error("asset library: cannot open " + index_json_path);
    nlohmann::json j = nlohmann::json::parse(f);
    std::vector<AssetTemplate> out;
    for (const auto& e : j.at("templates")) {
        AssetTemplate t;
        t.id = e.at("id").get<std::string>();
        t.caption = e.at("caption").get<std::string>();
        t.mesh_path = e.at("mesh").get<std::string>();
        for (const auto& tag : e.at("tags")) t.tags.insert(tag.get<std::string>());
        t.default_height = e.value("default_height", 4.0);
        if (e.contains("material_groups"))
            for (const auto& g : e.at("material_groups")) {
                TemplateGroup group;
                group.name = g.at("name").get<std::string>();
                group.tri_begin = g.at("tri_begin").get<int>();
                group.tri_end = g.at("tri_end").get<int>();
                group.alpha_file = g.value("alpha", "");
                t.material_groups.push_back(std::move(group));
            }
        out.push_back(std::move(t));
    }
    return out;
}

TerrainMesh load_template_mesh_gltf(const std::string& path) {
    const gltf::Document doc = gltf::read_gltf(path);
    TerrainMesh mesh;
    for (const auto& def : doc.meshes) {
        for (const auto& prim : def.primitives) {
            const int base = static_cast<int>(mesh.vertices.size());
            for (size_t i = 0; i + 2 < prim.positions.size(); i += 3)
                mesh.vertices.push_back(
                    {prim.positions[i], prim.positions[i + 1], prim.positions[i + 2]});
            for (size_t i = 0; i + 1 < prim.uv0.size(); i += 2)
                mesh.uv0.push_back({prim.uv0[i], prim.uv0[i + 1]});
            for (size_t i = 0; i + 2 < prim.indices.size(); i += 3)
                mesh.triangles.push_back({base + static_cast<int>(prim.indices[i]),
                                          base + static_cast<int>(prim.indices[i + 1]),
                                          base + static_cast<int>(prim.indices[i + 2])});
        }
    }
    if (mesh.uv0.size() != mesh.vertices.size()) mesh.uv0.clear();
    return mesh;
}

const AssetTemplate& select_template(agent::WorldAgent& agent,
                                     const std::vector<AssetTemplate>& library,
                                     const std::string& scene_context, std::string* audit_note) {
    if (library.empty()) throw std::runtime_error("asset library is empty");
    std::vector<std::string> ids;
    std::vector<std::string> tag_lines;
    for (const AssetTemplate& t : library) {
        ids.push_back(t.id);
        std::string tags;
        for (const std::string& tag : t.tags) tags += tag + " ";
        tag_lines.push_back(tags);
    }
    std::string choice;
    try {
        choice = agent.choose_template(scene_context, ids, tag_lines).content;
    } catch (const agent::AgentUnavailable&) {
        choice.clear();
    }
    for (const AssetTemplate& t : library)
        if (t.id == choice) return t;
    // unknown id: fall back to the keyword scorer and note it
    const int best = agent::keyword_argmax(scene_context, ids, tag_lines);
    if (audit_note)
        *audit_note = choice.empty() ? "agent unavailable; stub scorer chose " + ids[best]
                                     : "agent returned unknown id '" + choice +
                                           "'; stub scorer chose " + ids[best];
    return library[best];
}

std::string design_prompt(agent::WorldAgent& agent, const std::string& scene_context,
                          const AssetTemplate& tmpl) {
    std::string tags;
    for (const std::string& tag : tmpl.tags) tags += (tags.empty() ? "" : " ") + tag;
    std::string prompt;
    try {
        prompt = agent.design_prompt(scene_context, tmpl.caption, tags).content;
    } catch (const agent::AgentUnavailable&) {
        prompt.clear();
    }
    if (prompt.empty()) {
        prompt = tmpl.caption;
        if (!tags.empty()) prompt += ", " + tags;
        if (!scene_context.empty()) prompt += ", set in " + scene_context;
        prompt += ", summer season, natural photographic style";
    }
    return prompt;
}

std::string record_to_jsonl(const PlacementRecord& r) {
    nlohmann::json j;
    j["coarse_cell"] = r.coarse_cell;
    j["fine_cell"] = r.fine_cell;
    j["coarse_rect"] = {r.coarse_rect.x0, r.coarse_rect.y0, r.coarse_rect.x1, r.coarse_rect.y1};
    j["fine_rect"] = {r.fine_rect.x0, r.fine_rect.y0, r.fine_rect.x1, r.fine_rect.y1};
    j["pixel"] = {r.pixel.x, r.pixel.y};
    j["world_point"] = {r.world_point.x, r.world_point.y, r.world_point.z};
    j["distance"] = r.distance;
    j["band"] = band_name(r.band);
    j["template_id"] = r.template_id;
    j["asset_prompt"] = r.asset_prompt;
    j["status"] = r.status;
    j["transcript"] = r.transcript;
    return j.dump();
}

void write_audit_log(const std::string& path, const std::vector<PlacementRecord>& records) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("audit log: cannot open " + path);
    for (const PlacementRecord& r : records) f << record_to_jsonl(r) << "\n";
}

double SizeTable::lookup(const std::string& prompt) const {
    for (const std::string& word : agent::split_words(prompt)) {
        const auto it = heights.find(word);
        if (it != heights.end()) return it->second;
    }
    return default_height;
}

ProxyAsset instantiate_proxy(const PlacementRecord& record, const gen::RgbaTexture& texture,
                             Vec3 origin, const SizeTable& sizes, const AssetTemplate* tmpl,
                             const TerrainMesh* template_mesh) {
    if (!record.valid) throw std::runtime_error("instantiate_proxy: record is not valid");
    ProxyAsset asset;
    asset.anchor = record.world_point;
    asset.texture = texture;

    if (record.band == Band::midground) {
        asset.kind = ProxyAsset::Kind::billboard;
        asset.name = "billboard_" + record.coarse_cell + record.fine_cell;
        Vec3 to_origin = origin - record.world_point;
        to_origin.y = 0.0;
        const double horiz = length(to_origin);
        const Vec3 facing = horiz > 1e-9 ? to_origin * (1.0 / horiz) : Vec3{0, 0, -1};
        asset.yaw = std::atan2(facing.x, -facing.z);
        asset.height = sizes.lookup(record.asset_prompt);
        const double aspect =
            texture.height() > 0 ? static_cast<double>(texture.width()) / texture.height() : 1.0;
        asset.width = asset.height * aspect;
        const Vec3 up{0, 1, 0};
        const Vec3 right = cross(up, facing);
        const Vec3 half = right * (asset.width * 0.5);
        asset.vertices = {Vec3{0, 0, 0} - half, Vec3{0, 0, 0} + half,
                          up * asset.height + half, up * asset.height - half};
        asset.triangles = {{0, 1, 2}, {0, 2, 3}};
        asset.uvs = {{0.0, 1.0}, {1.0, 1.0}, {1.0, 0.0}, {0.0, 0.0}};
        return asset;
    }

    // foreground: alpha cards on a retrieved template mesh
    if (!tmpl || !template_mesh)
        throw TemplateMissing("foreground placement without a template mesh: " + record.status);
    asset.kind = ProxyAsset::Kind::alpha_card_template;
    asset.name = "template_" + tmpl->id + "_" + record.coarse_cell + record.fine_cell;
    asset.template_id = tmpl->id;
    asset.vertices = template_mesh->vertices;
    asset.triangles = template_mesh->triangles;
    asset.uvs.resize(template_mesh->vertices.size());
    if (template_mesh->has_uv0())
        asset.uvs = template_mesh->uv0;
    asset.height = tmpl->default_height;
    asset.width = tmpl->default_height;

    const int tri_count = static_cast<int>(asset.triangles.size());
    std::vector<uint8_t> covered(tri_count, 0);
    for (const TemplateGroup& tg : tmpl->material_groups) {
        ProxyAsset::Group group;
        group.name = tg.name;
        group.tri_begin = tg.tri_begin;
        group.tri_end = tg.tri_end;
        group.texture = texture;
        if (tg.tri_begin < 0 || tg.tri_end > tri_count || tg.tri_begin >= tg.tri_end)
            throw std::runtime_error("template " + tmpl->id + ": bad material group range");
        for (int t = tg.tri_begin; t < tg.tri_end; ++t) {
            if (covered[t])
                throw std::runtime_error("template " + tmpl->id + ": overlapping material groups");
            covered[t] = 1;
        }
        asset.groups.push_back(std::move(group));
    }
    for (int t = 0; t < tri_count; ++t)
        if (!covered[t])
            throw std::runtime_error("template " + tmpl->id + ": material groups do not cover all triangles");
    return asset;
}

ArrangementResult arrange_assets(agent::WorldAgent& agent, const Image& base_view,
                                 const TerrainMesh& terrain, const TriBvh& bvh, Vec3 origin,
                                 const std::vector<AssetTemplate>& library,
                                 const ArrangementParams& params) {
    ArrangementResult result;
    const std::vector<Lineage> lineages =
        propose_placements(agent, base_view, params.grid, params.scene_context, params.count_min,
                           params.count_max, params.fine_div, &result.warnings);

    std::vector<Vec3> accepted_points;
    for (size_t i = 0; i < lineages.size(); ++i) {
        const Lineage& lineage = lineages[i];
        PlacementRecord record;
        record.coarse_cell = lineage.coarse_cell;
        record.fine_cell = lineage.fine_cell;
        record.coarse_rect = lineage.coarse_rect;
        record.fine_rect = lineage.fine_rect;
        record.transcript = lineage.transcript;
        record.pixel = sample_point(lineage.fine_rect, hash_combine(params.seed, 0x91aceull + i));

        try {
            const BackprojectResult hit =
                backproject(record.pixel, origin, terrain, bvh, params.grid.suitability_mask);
            record.world_point = hit.world_point;
            record.distance = hit.distance;
        } catch (const MaskedRegion&) {
            record.status = "rejected:masked_region";
            result.records.push_back(std::move(record));
            continue;
        } catch (const NoHit&) {
            record.status = "rejected:no_hit";
            result.records.push_back(std::move(record));
            continue;
        } catch (const WaterHit&) {
            record.status = "rejected:water_hit";
            result.records.push_back(std::move(record));
            continue;
        }

        record.band = classify_band(record.distance, params.bands);
        if (record.band == Band::out_of_band) {
            record.status = "rejected:out_of_band";
            result.records.push_back(std::move(record));
            continue;
        }

        bool too_close = false;
        for (const Vec3& p : accepted_points) {
            if (length(p - record.world_point) < params.min_spacing) {
                too_close = true;
                break;
            }
        }
        if (too_close) {
            record.status = "rejected:spacing";
            result.records.push_back(std::move(record));
            continue;
        }

        if (record.band == Band::foreground && !library.empty()) {
            std::string note;
            const AssetTemplate& tmpl = select_template(agent, library, params.scene_context, &note);
            record.template_id = tmpl.id;
            record.asset_prompt = design_prompt(agent, params.scene_context, tmpl);
            if (!note.empty()) record.transcript += "\n" + note;
        } else {
            AssetTemplate distant;
            distant.caption = "distant scenery";
            record.asset_prompt = design_prompt(agent, params.scene_context, distant);
        }

        record.valid = true;
        record.status = "valid";
        accepted_points.push_back(record.world_point);
        ++result.valid_count;
        result.records.push_back(std::move(record));
    }

    if (result.valid_count < params.count_min)
        result.warnings.push_back("placement shortfall: " + std::to_string(result.valid_count) +
                                  " valid of requested [" + std::to_string(params.count_min) + "," +
                                  std::to_string(params.count_max) + "]");
    return result;
}

}  // namespace pw::arrange
