#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "viewadapt/camgeom.hpp"
#include "viewadapt/rng.hpp"

#include <Eigen/Geometry>

#include <filesystem>
#include <fstream>

using namespace viewadapt;
using camgeom::Mat3;
using camgeom::Pose;
using camgeom::Vec3;

namespace {

Pose rot_z(double deg) {
    Pose p;
    p.rotation = Eigen::AngleAxisd(deg * M_PI / 180.0, Vec3::UnitZ()).toRotationMatrix();
    return p;
}

Pose random_pose(rng::CounterRng& gen) {
    const double z = 2.0 * gen.next_double() - 1.0;
    const double phi = 2.0 * M_PI * gen.next_double();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 axis(r * std::cos(phi), r * std::sin(phi), z);
    const double angle = gen.uniform(-M_PI, M_PI);
    Pose p;
    p.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    p.translation = Vec3(gen.uniform(-2, 2), gen.uniform(-2, 2), gen.uniform(-2, 2));
    return p;
}

double pose_distance(const Pose& a, const Pose& b) {
    return (a.rotation - b.rotation).norm() + (a.translation - b.translation).norm();
}

}  // namespace

TEST_CASE("compose with identity returns the other pose") {
    rng::CounterRng gen(7, 0);
    const Pose p = random_pose(gen);
    CHECK(pose_distance(camgeom::compose(Pose{}, p), p) < 1e-12);
    CHECK(pose_distance(camgeom::compose(p, Pose{}), p) < 1e-12);
}

TEST_CASE("compose of pose and its inverse is identity") {
    rng::CounterRng gen(8, 0);
    for (int i = 0; i < 50; ++i) {
        const Pose p = random_pose(gen);
        CHECK(pose_distance(camgeom::compose(p, camgeom::inverse(p)), Pose{}) < 1e-9);
    }
}

TEST_CASE("rotations about one axis compose by angle addition") {
    const Pose p = camgeom::compose(rot_z(30), rot_z(60));
    CHECK(pose_distance(p, rot_z(90)) < 1e-12);
}

TEST_CASE("inverse of identity and of a pure translation") {
    CHECK(pose_distance(camgeom::inverse(Pose{}), Pose{}) == 0.0);
    Pose t;
    t.translation = Vec3(1, 2, 3);
    const Pose inv = camgeom::inverse(t);
    CHECK(inv.translation.isApprox(Vec3(-1, -2, -3)));
    CHECK(inv.rotation.isApprox(Mat3::Identity()));
}

TEST_CASE("inverse is an involution") {
    rng::CounterRng gen(9, 0);
    for (int i = 0; i < 50; ++i) {
        const Pose p = random_pose(gen);
        CHECK(pose_distance(camgeom::inverse(camgeom::inverse(p)), p) < 1e-12);
    }
}

TEST_CASE("group laws hold on random poses") {
    rng::CounterRng gen(10, 0);
    for (int i = 0; i < 30; ++i) {
        const Pose a = random_pose(gen), b = random_pose(gen), c = random_pose(gen);
        const Pose ab_c = camgeom::compose(camgeom::compose(a, b), c);
        const Pose a_bc = camgeom::compose(a, camgeom::compose(b, c));
        CHECK(pose_distance(ab_c, a_bc) < 1e-9);
    }
}

TEST_CASE("projection of points on the optical axis hits the principal point") {
    camgeom::Intrinsics k{500, 500, 128, 120, 256, 240};
    for (double d : {0.001, 0.5, 3.0, 100.0}) {
        const auto uv = camgeom::project(Vec3(0, 0, d), k);
        REQUIRE(uv.has_value());
        CHECK(uv->x() == doctest::Approx(128).epsilon(1e-12));
        CHECK(uv->y() == doctest::Approx(120).epsilon(1e-12));
    }
}

TEST_CASE("points behind the optical center do not project") {
    camgeom::Intrinsics k{500, 500, 128, 120, 256, 240};
    CHECK_FALSE(camgeom::project(Vec3(0, 0, -1), k).has_value());
    CHECK_FALSE(camgeom::project(Vec3(0.3, 0.1, 0), k).has_value());
    CHECK_FALSE(camgeom::project(Vec3(0, 0, 1e-9), k).has_value());
}

TEST_CASE("projection example evaluated by hand") {
    camgeom::Intrinsics k{500, 500, 128, 128, 256, 256};
    const auto uv = camgeom::project(Vec3(0.1, 0, 2), k);
    REQUIRE(uv.has_value());
    CHECK(uv->x() == doctest::Approx(153).epsilon(1e-12));
    CHECK(uv->y() == doctest::Approx(128).epsilon(1e-12));
}

TEST_CASE("unprojection at the principal point runs down the optical axis") {
    camgeom::Intrinsics k{500, 500, 128, 120, 256, 240};
    CHECK(camgeom::unproject(128, 120, 2.5, k).isApprox(Vec3(0, 0, 2.5)));
}

TEST_CASE("unprojection inverts the hand-computed projection example") {
    camgeom::Intrinsics k{500, 500, 128, 128, 256, 256};
    CHECK(camgeom::unproject(153, 128, 2, k).isApprox(Vec3(0.1, 0, 2), 1e-12));
}

TEST_CASE("unprojection rejects invalid depth") {
    camgeom::Intrinsics k{500, 500, 128, 120, 256, 240};
    CHECK_THROWS_AS(camgeom::unproject(10, 10, 0.0, k), std::invalid_argument);
    CHECK_THROWS_AS(camgeom::unproject(10, 10, -1.0, k), std::invalid_argument);
    CHECK_THROWS_AS(camgeom::unproject(10, 10, std::nan(""), k), std::invalid_argument);
    CHECK_THROWS_AS(camgeom::unproject(10, 10, INFINITY, k), std::invalid_argument);
}

TEST_CASE("project and unproject are mutually inverse") {
    camgeom::Intrinsics k{320, 330, 127, 130, 256, 260};
    rng::CounterRng gen(11, 0);
    for (int i = 0; i < 100000; ++i) {
        const double u = gen.uniform(-0.5, 255.5);
        const double v = gen.uniform(-0.5, 259.5);
        const double d = gen.uniform(1e-3, 50.0);
        const auto uv = camgeom::project(camgeom::unproject(u, v, d, k), k);
        REQUIRE(uv.has_value());
        CHECK(std::abs(uv->x() - u) < 1e-6);
        CHECK(std::abs(uv->y() - v) < 1e-6);
    }
}

TEST_CASE("relative pose of a camera with itself is identity") {
    rng::CounterRng gen(12, 0);
    const Pose p = random_pose(gen);
    CHECK(pose_distance(camgeom::relative_pose(p, p), Pose{}) < 1e-9);
}

TEST_CASE("relative pose from the identity frame is the destination pose") {
    rng::CounterRng gen(13, 0);
    const Pose d = random_pose(gen);
    CHECK(pose_distance(camgeom::relative_pose(Pose{}, d), d) < 1e-12);
}

TEST_CASE("relative poses chain") {
    rng::CounterRng gen(14, 0);
    for (int i = 0; i < 30; ++i) {
        const Pose a = random_pose(gen), b = random_pose(gen), c = random_pose(gen);
        const Pose chained =
            camgeom::compose(camgeom::relative_pose(b, c), camgeom::relative_pose(a, b));
        CHECK(pose_distance(chained, camgeom::relative_pose(a, c)) < 1e-9);
    }
}

TEST_CASE("look_at points the optical axis at the target") {
    const Vec3 center(0.2, -0.4, 0.8);
    const Vec3 target(0.0, 0.05, 0.0);
    const Pose pose = camgeom::look_at(center, target);
    CHECK(camgeom::is_rotation(pose.rotation));
    const Vec3 cam_pt = camgeom::transform(pose, target);
    CHECK(cam_pt.x() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(cam_pt.y() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(cam_pt.z() == doctest::Approx((target - center).norm()));
    CHECK_THROWS_AS(camgeom::look_at(center, center), std::invalid_argument);
}

TEST_CASE("intrinsics validation catches bad fields") {
    CHECK_THROWS_AS(camgeom::validate(camgeom::Intrinsics{0, 1, 0, 0, 10, 10}),
                    std::invalid_argument);
    CHECK_THROWS_AS(camgeom::validate(camgeom::Intrinsics{100, 100, 12, 0, 10, 10}),
                    std::invalid_argument);
    CHECK_THROWS_AS(camgeom::validate(camgeom::Intrinsics{100, 100, 5, 5, 0, 10}),
                    std::invalid_argument);
    CHECK_NOTHROW(camgeom::validate(camgeom::Intrinsics{100, 100, 5, 5, 10, 10}));
}

TEST_CASE("rig round-trips through its text form bit-exactly") {
    rng::CounterRng gen(15, 0);
    camgeom::CameraRig rig;
    for (int i = 0; i < 3; ++i) {
        camgeom::CameraModel cam;
        cam.id = "cam" + std::to_string(i);
        cam.intrinsics = {gen.uniform(100, 500), gen.uniform(100, 500), gen.uniform(0, 255),
                          gen.uniform(0, 255), 256, 256};
        cam.pose = random_pose(gen);
        rig.cameras.push_back(cam);
    }
    const std::string text = camgeom::serialize_rig(rig);
    const camgeom::CameraRig back = camgeom::parse_rig(text);
    REQUIRE(back.cameras.size() == rig.cameras.size());
    for (size_t i = 0; i < rig.cameras.size(); ++i) {
        CHECK(back.cameras[i].id == rig.cameras[i].id);
        CHECK(back.cameras[i].intrinsics.fx == rig.cameras[i].intrinsics.fx);
        CHECK(back.cameras[i].intrinsics.cy == rig.cameras[i].intrinsics.cy);
        CHECK(back.cameras[i].pose.rotation == rig.cameras[i].pose.rotation);
        CHECK(back.cameras[i].pose.translation == rig.cameras[i].pose.translation);
    }
    CHECK(camgeom::serialize_rig(back) == text);

    const std::string path = (std::filesystem::temp_directory_path() / "va_rig_test.txt").string();
    camgeom::save_rig(rig, path);
    const camgeom::CameraRig loaded = camgeom::load_rig(path);
    CHECK(camgeom::serialize_rig(loaded) == text);
    std::filesystem::remove(path);
}

TEST_CASE("rig parser rejects malformed input") {
    CHECK_THROWS(camgeom::parse_rig("fx 100\n"));
    CHECK_THROWS(camgeom::parse_rig("camera a\nfx 100\n"));  // missing end
    CHECK_THROWS(camgeom::parse_rig("camera a\nbogus 1\nend\n"));
    camgeom::CameraRig rig;
    rig.cameras.push_back({"a", {100, 100, 5, 5, 10, 10}, Pose{}});
    rig.cameras.push_back({"a", {100, 100, 5, 5, 10, 10}, Pose{}});
    CHECK_THROWS_AS(camgeom::validate(rig), std::invalid_argument);
}
