#pragma once

#include "viewadapt/camgeom.hpp"
#include "viewadapt/image.hpp"
#include "viewadapt/inpaint.hpp"
#include "viewadapt/scenesim.hpp"
#include "viewadapt/warpcore.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <thread>
#include <variant>
#include <vector>

namespace viewadapt::nvslink {

using warpcore::Image;

// Wire format ("NVS1" protocol), all integers little-endian:
//   frame   := "NVS1" | u32 payload_len | payload
//   request := u8 version | u8 type(1) | u64 request_id
//            | u32 n_sources | u32 n_targets
//            | n_sources * (camera | raw RGB rows)
//            | n_targets * camera
//   camera  := f64 fx, fy, cx, cy, width, height | f64 rotation[9] row-major
//            | f64 translation[3]
//   response:= u8 version | u8 type(2) | u64 request_id | u8 status
//            | status==0 ? u32 n_images, n_images * (u32 w | u32 h | raw RGB)
//                        : u32 msg_len | msg bytes
// Source image byte counts derive from the width/height intrinsics fields.

constexpr std::uint8_t kProtocolVersion = 1;
constexpr std::size_t kDefaultFrameLimit = 64ull << 20;  // bytes, incl. header
constexpr int kDefaultTimeoutMs = 200;

enum class ProtoCode : std::uint8_t {
    Ok = 0,
    BadMagic = 1,
    Truncated = 2,
    VersionMismatch = 3,
    FrameTooLarge = 4,
    Malformed = 5,
    ServerError = 6,
};

const char* to_string(ProtoCode code);

struct ProtocolError : std::runtime_error {
    ProtoCode code;
    ProtocolError(ProtoCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

struct SourceView {
    camgeom::Intrinsics intrinsics;
    camgeom::Pose pose;
    Image image;
};

struct TargetView {
    camgeom::Intrinsics intrinsics;
    camgeom::Pose pose;
};

struct NvsRequest {
    std::uint8_t version = kProtocolVersion;
    std::uint64_t request_id = 0;
    std::vector<SourceView> sources;
    std::vector<TargetView> targets;
};

struct NvsResponse {
    std::uint64_t request_id = 0;
    ProtoCode status = ProtoCode::Ok;
    std::string message;          // populated on error statuses
    std::vector<Image> images;    // one per requested target, in order
};

/// Full frame (header + payload). Throws std::invalid_argument when the
/// request violates its invariants (no sources/targets, ragged source dims).
std::vector<std::uint8_t> encode_request(const NvsRequest& req);

/// Throws ProtocolError with a distinct code per failure mode.
NvsRequest decode_request(const std::vector<std::uint8_t>& frame,
                          std::size_t frame_limit = kDefaultFrameLimit);

std::vector<std::uint8_t> encode_response(const NvsResponse& resp);
NvsResponse decode_response(const std::vector<std::uint8_t>& frame,
                            std::size_t frame_limit = kDefaultFrameLimit);

struct Endpoint {
    std::string host = "127.0.0.1";
    int port = 0;
};

enum class RemoteStatus {
    Ok = 0,
    Timeout,
    ConnectionRefused,
    ConnectionClosed,
    ProtocolViolation,
    IoError,
};

const char* to_string(RemoteStatus status);

struct RemoteResult {
    RemoteStatus status = RemoteStatus::IoError;
    NvsResponse response;     // meaningful when status == Ok
    double latency_ms = 0.0;  // monotone-clock round trip
    std::string detail;
};

/// One framed request/response over a fresh stream connection.
RemoteResult synthesize_remote(const Endpoint& endpoint, const NvsRequest& req,
                               int timeout_ms = kDefaultTimeoutMs);

/// Server behaviors: Echo returns the source images as-is (errors when a
/// target size disagrees); Oracle renders the held scene at each requested
/// target; GeomBaseline reprojects the request's RGB with depth rendered
/// from the held scene, then fills holes.
struct EchoMode {};
struct OracleMode {
    scenesim::SceneDescription scene;
};
struct GeomBaselineMode {
    scenesim::SceneDescription scene;
    warpcore::SplatParams splat;
    inpaint::InpaintParams inpaint;
};
using ServerMode = std::variant<EchoMode, OracleMode, GeomBaselineMode>;

/// Blocking mock service, one thread per connection; requests on a
/// connection are served strictly in order.
class MockNvsServer {
public:
    explicit MockNvsServer(ServerMode mode);
    ~MockNvsServer();

    MockNvsServer(const MockNvsServer&) = delete;
    MockNvsServer& operator=(const MockNvsServer&) = delete;

    /// Binds and starts serving; port 0 picks an ephemeral port.
    void start(const std::string& host = "127.0.0.1", int port = 0);
    void stop();

    int port() const { return port_; }
    Endpoint endpoint() const { return Endpoint{host_, port_}; }

    NvsResponse process(const NvsRequest& req) const;  // mode logic, exposed for tests

private:
    void accept_loop();
    void serve_connection(int fd);

    ServerMode mode_;
    std::string host_;
    int port_ = 0;
    int listen_fd_ = -1;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::mutex conn_mutex_;
    std::vector<int> conn_fds_;
    std::vector<std::thread> conn_threads_;
};

}  // namespace viewadapt::nvslink
