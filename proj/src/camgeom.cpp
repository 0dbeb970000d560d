#include "viewadapt/camgeom.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace viewadapt::camgeom {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& tok, const std::string& what) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw std::runtime_error("rig: bad number for " + what + ": '" + tok + "'");
    return v;
}

}  // namespace

std::string serialize_rig(const CameraRig& rig) {
    validate(rig);
    std::ostringstream out;
    out << "# camera rig: one 'camera <id>' section per camera,\n";
    out << "# rotation row-major (9 values), translation (3 values), world-to-camera.\n";
    for (const CameraModel& cam : rig.cameras) {
        out << "camera " << cam.id << "\n";
        out << "fx " << fmt_double(cam.intrinsics.fx) << "\n";
        out << "fy " << fmt_double(cam.intrinsics.fy) << "\n";
        out << "cx " << fmt_double(cam.intrinsics.cx) << "\n";
        out << "cy " << fmt_double(cam.intrinsics.cy) << "\n";
        out << "width " << cam.intrinsics.width << "\n";
        out << "height " << cam.intrinsics.height << "\n";
        out << "rotation";
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out << " " << fmt_double(cam.pose.rotation(r, c));
        out << "\n";
        out << "translation";
        for (int r = 0; r < 3; ++r) out << " " << fmt_double(cam.pose.translation(r));
        out << "\n";
        out << "end\n";
    }
    return out.str();
}

CameraRig parse_rig(const std::string& text) {
    CameraRig rig;
    std::istringstream in(text);
    std::string line;
    std::optional<CameraModel> cur;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw std::runtime_error("rig: line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "camera") {
            if (cur) fail("unterminated camera section");
            cur.emplace();
            ls >> cur->id;
            if (cur->id.empty()) fail("camera id missing");
            continue;
        }
        if (!cur) fail("field outside camera section");
        std::string tok;
        if (key == "fx" || key == "fy" || key == "cx" || key == "cy") {
            ls >> tok;
            const double v = parse_double(tok, key);
            if (key == "fx") cur->intrinsics.fx = v;
            else if (key == "fy") cur->intrinsics.fy = v;
            else if (key == "cx") cur->intrinsics.cx = v;
            else cur->intrinsics.cy = v;
        } else if (key == "width" || key == "height") {
            int v = 0;
            ls >> v;
            if (!ls) fail("bad integer for " + key);
            (key == "width" ? cur->intrinsics.width : cur->intrinsics.height) = v;
        } else if (key == "rotation") {
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    if (!(ls >> tok)) fail("rotation needs 9 values");
                    cur->pose.rotation(r, c) = parse_double(tok, "rotation");
                }
        } else if (key == "translation") {
            for (int r = 0; r < 3; ++r) {
                if (!(ls >> tok)) fail("translation needs 3 values");
                cur->pose.translation(r) = parse_double(tok, "translation");
            }
        } else if (key == "end") {
            validate(cur->intrinsics);
            validate(cur->pose);
            rig.cameras.push_back(std::move(*cur));
            cur.reset();
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    if (cur) throw std::runtime_error("rig: missing 'end' for camera '" + cur->id + "'");
    validate(rig);
    return rig;
}

void save_rig(const CameraRig& rig, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("rig: cannot open for writing: " + path);
    out << serialize_rig(rig);
}

CameraRig load_rig(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("rig: cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_rig(buf.str());
}

}  // namespace viewadapt::camgeom
