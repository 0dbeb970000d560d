#include "viewadapt/scenesim.hpp"

#include "viewadapt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace viewadapt::scenesim {

namespace {

constexpr double kRayMin = 1e-6;

struct Hit {
    double s = std::numeric_limits<double>::infinity();  // ray parameter = z-depth
    Vec3 normal = Vec3::UnitZ();
    Rgb albedo{};
    bool checker = false;
    Vec3 point = Vec3::Zero();
};

struct CheckerFrame {
    Vec3 t1, t2;
};

CheckerFrame checker_frame(const Vec3& n) {
    const Vec3 a = std::abs(n.x()) < 0.707 ? Vec3::UnitX() : Vec3::UnitY();
    CheckerFrame f;
    f.t1 = n.cross(a).normalized();
    f.t2 = n.cross(f.t1);
    return f;
}

bool hit_plane(const Plane& plane, const Vec3& origin, const Vec3& dir, double* s) {
    const double denom = plane.normal.dot(dir);
    if (std::abs(denom) < 1e-12) return false;
    const double t = (plane.offset - plane.normal.dot(origin)) / denom;
    if (t <= kRayMin) return false;
    *s = t;
    return true;
}

bool hit_sphere(const Sphere& sp, const Vec3& origin, const Vec3& dir, double* s) {
    const Vec3 oc = origin - sp.center;
    const double a = dir.dot(dir);
    const double b = 2.0 * dir.dot(oc);
    const double c = oc.dot(oc) - sp.radius * sp.radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return false;
    const double sq = std::sqrt(disc);
    double t = (-b - sq) / (2.0 * a);
    if (t <= kRayMin) t = (-b + sq) / (2.0 * a);
    if (t <= kRayMin) return false;
    *s = t;
    return true;
}

bool hit_box(const BoxPrim& box, const Vec3& origin, const Vec3& dir, double* s, Vec3* normal) {
    double tmin = -std::numeric_limits<double>::infinity();
    double tmax = std::numeric_limits<double>::infinity();
    int axis = 0;
    double sign = 1.0;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(dir(i)) < 1e-15) {
            if (origin(i) < box.min(i) || origin(i) > box.max(i)) return false;
            continue;
        }
        double t0 = (box.min(i) - origin(i)) / dir(i);
        double t1 = (box.max(i) - origin(i)) / dir(i);
        double near_sign = -1.0;
        if (t0 > t1) {
            std::swap(t0, t1);
            near_sign = 1.0;
        }
        if (t0 > tmin) {
            tmin = t0;
            axis = i;
            sign = near_sign;
        }
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return false;
    }
    double t = tmin;
    if (t <= kRayMin) t = tmax;  // origin inside the box
    if (t <= kRayMin || t > tmax) return false;
    *s = t;
    *normal = Vec3::Zero();
    (*normal)(axis) = sign;
    return true;
}

}  // namespace

Rgb shade(const Rgb& albedo, const Vec3& normal, const Vec3& ray_dir, const DirectionalLight& light) {
    Vec3 n = normal;
    if (n.dot(ray_dir) > 0.0) n = -n;
    const double diff = std::max(0.0, n.dot(light.to_light));
    const double f = light.ambient + (1.0 - light.ambient) * diff;
    Rgb out;
    for (int c = 0; c < 3; ++c)
        out[c] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(albedo[c] * f), 0, 255));
    return out;
}

void validate(const SceneDescription& scene) {
    if (scene.table) camgeom::validate(scene.table->plane);
    if (scene.table && !(scene.table->cell > 0.0))
        throw std::invalid_argument("scene: checker cell must be positive");
    for (const Primitive& p : scene.objects) {
        if (const Sphere* s = std::get_if<Sphere>(&p)) {
            if (!(s->radius > 0.0)) throw std::invalid_argument("scene: sphere radius must be positive");
        } else {
            const BoxPrim& b = std::get<BoxPrim>(p);
            if (!(b.min.x() < b.max.x() && b.min.y() < b.max.y() && b.min.z() < b.max.z()))
                throw std::invalid_argument("scene: box min must be below max componentwise");
        }
    }
    if (!(scene.light.ambient >= 0.0 && scene.light.ambient <= 1.0))
        throw std::invalid_argument("scene: ambient fraction must lie in [0, 1]");
    if (std::abs(scene.light.to_light.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("scene: light direction must be unit length");
}

RenderOutput render(const SceneDescription& scene, const CameraModel& cam) {
    validate(scene);
    camgeom::validate(cam.intrinsics);
    camgeom::validate(cam.pose);

    const int w = cam.intrinsics.width;
    const int h = cam.intrinsics.height;
    RenderOutput out;
    out.image = Image(w, h);
    out.depth = DepthMap(w, h, 0.0f);

    const Vec3 origin = camgeom::camera_center(cam.pose);
    const camgeom::Mat3 cam_to_world = cam.pose.rotation.transpose();
    CheckerFrame frame{};
    if (scene.table) frame = checker_frame(scene.table->plane.normal);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // unnormalized direction with unit z in the camera frame, so the
            // ray parameter equals z-depth
            const Vec3 dir_cam((x - cam.intrinsics.cx) / cam.intrinsics.fx,
                               (y - cam.intrinsics.cy) / cam.intrinsics.fy, 1.0);
            const Vec3 dir = cam_to_world * dir_cam;

            Hit best;
            if (scene.table) {
                double s;
                if (hit_plane(scene.table->plane, origin, dir, &s) && s < best.s) {
                    best.s = s;
                    best.normal = scene.table->plane.normal;
                    best.checker = true;
                    best.point = origin + s * dir;
                }
            }
            for (const Primitive& prim : scene.objects) {
                if (const Sphere* sp = std::get_if<Sphere>(&prim)) {
                    double s;
                    if (hit_sphere(*sp, origin, dir, &s) && s < best.s) {
                        best.s = s;
                        best.point = origin + s * dir;
                        best.normal = (best.point - sp->center) / sp->radius;
                        best.albedo = sp->albedo;
                        best.checker = false;
                    }
                } else {
                    const BoxPrim& bx = std::get<BoxPrim>(prim);
                    double s;
                    Vec3 n;
                    if (hit_box(bx, origin, dir, &s, &n) && s < best.s) {
                        best.s = s;
                        best.point = origin + s * dir;
                        best.normal = n;
                        best.albedo = bx.albedo;
                        best.checker = false;
                    }
                }
            }

            std::uint8_t* px = out.image.at(x, y);
            if (!std::isfinite(best.s)) {
                px[0] = scene.background[0];
                px[1] = scene.background[1];
                px[2] = scene.background[2];
                continue;
            }
            Rgb albedo = best.albedo;
            if (best.checker) {
                const CheckerTable& tb = *scene.table;
                const long cu = static_cast<long>(std::floor(best.point.dot(frame.t1) / tb.cell));
                const long cv = static_cast<long>(std::floor(best.point.dot(frame.t2) / tb.cell));
                albedo = ((cu + cv) & 1L) ? tb.color_b : tb.color_a;
            }
            const Rgb lit = shade(albedo, best.normal, dir, scene.light);
            px[0] = lit[0];
            px[1] = lit[1];
            px[2] = lit[2];
            out.depth.at(x, y) = static_cast<float>(best.s);
        }
    }
    return out;
}

std::vector<RenderOutput> render_rig(const SceneDescription& scene, const CameraRig& rig) {
    camgeom::validate(rig);
    std::vector<RenderOutput> outs;
    outs.reserve(rig.cameras.size());
    for (const CameraModel& cam : rig.cameras) outs.push_back(render(scene, cam));
    return outs;
}

double surface_distance(const SceneDescription& scene, const Vec3& point) {
    double best = std::numeric_limits<double>::infinity();
    if (scene.table)
        best = std::abs(scene.table->plane.normal.dot(point) - scene.table->plane.offset);
    for (const Primitive& prim : scene.objects) {
        if (const Sphere* sp = std::get_if<Sphere>(&prim)) {
            best = std::min(best, std::abs((point - sp->center).norm() - sp->radius));
        } else {
            const BoxPrim& bx = std::get<BoxPrim>(prim);
            const Vec3 center = 0.5 * (bx.min + bx.max);
            const Vec3 half = 0.5 * (bx.max - bx.min);
            const Vec3 q = (point - center).cwiseAbs() - half;
            const Vec3 qpos = q.cwiseMax(0.0);
            const double outside = qpos.norm();
            const double inside = std::min(q.maxCoeff(), 0.0);
            best = std::min(best, std::abs(outside + inside));
        }
    }
    return best;
}

const std::vector<Rgb>& object_palette() {
    static const std::vector<Rgb> palette = {
        Rgb{200, 40, 40},   // red
        Rgb{40, 180, 60},   // green
        Rgb{40, 80, 200},   // blue
        Rgb{220, 200, 40},  // yellow
        Rgb{190, 50, 190},  // magenta
        Rgb{230, 130, 30},  // orange
    };
    return palette;
}

SceneDescription sample_scene(std::uint64_t seed, const SceneSampleParams& params) {
    rng::CounterRng gen(seed, /*stream=*/0);
    SceneDescription scene;
    scene.table = CheckerTable{};
    scene.table->plane = Plane{Vec3::UnitZ(), params.table_height};
    scene.table->cell = params.checker_cell;

    const auto& palette = object_palette();
    const int span = params.max_objects - params.min_objects + 1;
    const int count = params.min_objects + static_cast<int>(gen.next_u32() % span);

    struct Footprint {
        double x, y, r;
    };
    std::vector<Footprint> placed;
    for (int i = 0; i < count; ++i) {
        for (int attempt = 0; attempt < 64; ++attempt) {
            const bool sphere = gen.next_double() < 0.5;
            const double cx = gen.uniform(-params.workspace_half, params.workspace_half);
            const double cy = gen.uniform(-params.workspace_half, params.workspace_half);
            const Rgb color = palette[gen.next_u32() % palette.size()];
            Primitive prim;
            double foot;
            if (sphere) {
                const double r = gen.uniform(params.min_size, params.max_size);
                prim = Sphere{Vec3(cx, cy, params.table_height + r), r, color};
                foot = r;
            } else {
                const double hx = gen.uniform(params.min_size, params.max_size);
                const double hy = gen.uniform(params.min_size, params.max_size);
                const double hz = gen.uniform(params.min_size, params.max_size * 1.5);
                prim = BoxPrim{Vec3(cx - hx, cy - hy, params.table_height),
                               Vec3(cx + hx, cy + hy, params.table_height + hz), color};
                foot = std::sqrt(hx * hx + hy * hy);
            }
            bool clear = true;
            for (const Footprint& f : placed) {
                const double dx = cx - f.x, dy = cy - f.y;
                if (std::sqrt(dx * dx + dy * dy) < foot + f.r + 0.01) {
                    clear = false;
                    break;
                }
            }
            if (clear) {
                scene.objects.push_back(prim);
                placed.push_back({cx, cy, foot});
                break;
            }
        }
    }
    return scene;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double tok_double(std::istringstream& ls, const char* what) {
    std::string tok;
    if (!(ls >> tok)) throw std::runtime_error(std::string("scene: missing value for ") + what);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw std::runtime_error(std::string("scene: bad number for ") + what + ": " + tok);
    return v;
}

int tok_u8(std::istringstream& ls, const char* what) {
    int v;
    if (!(ls >> v) || v < 0 || v > 255) throw std::runtime_error(std::string("scene: bad byte for ") + what);
    return v;
}

}  // namespace

std::string serialize_scene(const SceneDescription& scene) {
    std::ostringstream out;
    out << "# tabletop scene\n";
    if (scene.table) {
        const CheckerTable& t = *scene.table;
        out << "table " << fmt(t.plane.normal.x()) << " " << fmt(t.plane.normal.y()) << " "
            << fmt(t.plane.normal.z()) << " " << fmt(t.plane.offset) << " " << fmt(t.cell) << " "
            << int(t.color_a[0]) << " " << int(t.color_a[1]) << " " << int(t.color_a[2]) << " "
            << int(t.color_b[0]) << " " << int(t.color_b[1]) << " " << int(t.color_b[2]) << "\n";
    }
    for (const Primitive& prim : scene.objects) {
        if (const Sphere* s = std::get_if<Sphere>(&prim)) {
            out << "sphere " << fmt(s->center.x()) << " " << fmt(s->center.y()) << " "
                << fmt(s->center.z()) << " " << fmt(s->radius) << " " << int(s->albedo[0]) << " "
                << int(s->albedo[1]) << " " << int(s->albedo[2]) << "\n";
        } else {
            const BoxPrim& b = std::get<BoxPrim>(prim);
            out << "box " << fmt(b.min.x()) << " " << fmt(b.min.y()) << " " << fmt(b.min.z()) << " "
                << fmt(b.max.x()) << " " << fmt(b.max.y()) << " " << fmt(b.max.z()) << " "
                << int(b.albedo[0]) << " " << int(b.albedo[1]) << " " << int(b.albedo[2]) << "\n";
        }
    }
    out << "light " << fmt(scene.light.to_light.x()) << " " << fmt(scene.light.to_light.y()) << " "
        << fmt(scene.light.to_light.z()) << " " << fmt(scene.light.ambient) << "\n";
    out << "background " << int(scene.background[0]) << " " << int(scene.background[1]) << " "
        << int(scene.background[2]) << "\n";
    return out.str();
}

SceneDescription parse_scene(const std::string& text) {
    SceneDescription scene;
    scene.table.reset();
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "table") {
            CheckerTable t;
            t.plane.normal.x() = tok_double(ls, "table normal");
            t.plane.normal.y() = tok_double(ls, "table normal");
            t.plane.normal.z() = tok_double(ls, "table normal");
            t.plane.offset = tok_double(ls, "table offset");
            t.cell = tok_double(ls, "table cell");
            for (int c = 0; c < 3; ++c) t.color_a[c] = static_cast<std::uint8_t>(tok_u8(ls, "table color"));
            for (int c = 0; c < 3; ++c) t.color_b[c] = static_cast<std::uint8_t>(tok_u8(ls, "table color"));
            scene.table = t;
        } else if (key == "sphere") {
            Sphere s;
            s.center.x() = tok_double(ls, "sphere center");
            s.center.y() = tok_double(ls, "sphere center");
            s.center.z() = tok_double(ls, "sphere center");
            s.radius = tok_double(ls, "sphere radius");
            for (int c = 0; c < 3; ++c) s.albedo[c] = static_cast<std::uint8_t>(tok_u8(ls, "sphere albedo"));
            scene.objects.push_back(s);
        } else if (key == "box") {
            BoxPrim b;
            b.min.x() = tok_double(ls, "box min");
            b.min.y() = tok_double(ls, "box min");
            b.min.z() = tok_double(ls, "box min");
            b.max.x() = tok_double(ls, "box max");
            b.max.y() = tok_double(ls, "box max");
            b.max.z() = tok_double(ls, "box max");
            for (int c = 0; c < 3; ++c) b.albedo[c] = static_cast<std::uint8_t>(tok_u8(ls, "box albedo"));
            scene.objects.push_back(b);
        } else if (key == "light") {
            scene.light.to_light.x() = tok_double(ls, "light");
            scene.light.to_light.y() = tok_double(ls, "light");
            scene.light.to_light.z() = tok_double(ls, "light");
            scene.light.ambient = tok_double(ls, "ambient");
        } else if (key == "background") {
            for (int c = 0; c < 3; ++c) scene.background[c] = static_cast<std::uint8_t>(tok_u8(ls, "background"));
        } else {
            throw std::runtime_error("scene: unknown key '" + key + "'");
        }
    }
    validate(scene);
    return scene;
}

void save_scene(const SceneDescription& scene, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("scene: cannot open for writing: " + path);
    out << serialize_scene(scene);
}

SceneDescription load_scene(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("scene: cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scene(buf.str());
}

}  // namespace viewadapt::scenesim
