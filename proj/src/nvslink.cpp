#include "viewadapt/nvslink.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

namespace viewadapt::nvslink {

namespace {

constexpr char kMagic[4] = {'N', 'V', 'S', '1'};
constexpr std::uint8_t kTypeRequest = 1;
constexpr std::uint8_t kTypeResponse = 2;
constexpr int kMaxImageDim = 16384;

// --- payload writers/readers --------------------------------------------

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

struct Cursor {
    const std::uint8_t* p;
    std::size_t remaining;

    void need(std::size_t n) const {
        if (remaining < n) throw ProtocolError(ProtoCode::Malformed, "frame payload ends prematurely");
    }
    std::uint8_t u8() {
        need(1);
        const std::uint8_t v = *p;
        ++p;
        --remaining;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        const std::uint32_t v = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                                (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
        p += 4;
        remaining -= 4;
        return v;
    }
    std::uint64_t u64() {
        const std::uint64_t lo = u32();
        const std::uint64_t hi = u32();
        return lo | (hi << 32);
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    void bytes(std::uint8_t* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, p, n);
        p += n;
        remaining -= n;
    }
};

void put_camera(std::vector<std::uint8_t>& out, const camgeom::Intrinsics& k, const camgeom::Pose& pose) {
    put_f64(out, k.fx);
    put_f64(out, k.fy);
    put_f64(out, k.cx);
    put_f64(out, k.cy);
    put_f64(out, static_cast<double>(k.width));
    put_f64(out, static_cast<double>(k.height));
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) put_f64(out, pose.rotation(r, c));
    for (int r = 0; r < 3; ++r) put_f64(out, pose.translation(r));
}

void get_camera(Cursor& cur, camgeom::Intrinsics* k, camgeom::Pose* pose) {
    k->fx = cur.f64();
    k->fy = cur.f64();
    k->cx = cur.f64();
    k->cy = cur.f64();
    const double w = cur.f64();
    const double h = cur.f64();
    if (!(w >= 1.0 && h >= 1.0 && w <= kMaxImageDim && h <= kMaxImageDim) ||
        w != std::floor(w) || h != std::floor(h))
        throw ProtocolError(ProtoCode::Malformed, "camera width/height not a valid integer");
    k->width = static_cast<int>(w);
    k->height = static_cast<int>(h);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) pose->rotation(r, c) = cur.f64();
    for (int r = 0; r < 3; ++r) pose->translation(r) = cur.f64();
}

std::vector<std::uint8_t> wrap_frame(const std::vector<std::uint8_t>& payload) {
    std::vector<std::uint8_t> frame;
    frame.reserve(payload.size() + 8);
    frame.insert(frame.end(), kMagic, kMagic + 4);
    put_u32(frame, static_cast<std::uint32_t>(payload.size()));
    frame.insert(frame.end(), payload.begin(), payload.end());
    return frame;
}

// Strips the header and returns a payload cursor.
Cursor open_frame(const std::vector<std::uint8_t>& frame, std::size_t frame_limit) {
    if (frame.size() < 8) throw ProtocolError(ProtoCode::Truncated, "frame shorter than its header");
    if (std::memcmp(frame.data(), kMagic, 4) != 0)
        throw ProtocolError(ProtoCode::BadMagic, "bad frame magic");
    const std::uint32_t len = static_cast<std::uint32_t>(frame[4]) | (static_cast<std::uint32_t>(frame[5]) << 8) |
                              (static_cast<std::uint32_t>(frame[6]) << 16) |
                              (static_cast<std::uint32_t>(frame[7]) << 24);
    if (static_cast<std::size_t>(len) + 8 > frame_limit)
        throw ProtocolError(ProtoCode::FrameTooLarge, "frame exceeds size limit");
    if (frame.size() < static_cast<std::size_t>(len) + 8)
        throw ProtocolError(ProtoCode::Truncated, "frame payload truncated");
    return Cursor{frame.data() + 8, len};
}

void check_counts(std::size_t n_sources, std::size_t n_targets) {
    if (n_sources < 1) throw std::invalid_argument("nvs request: needs at least one source view");
    if (n_targets < 1) throw std::invalid_argument("nvs request: needs at least one target camera");
}

}  // namespace

const char* to_string(ProtoCode code) {
    switch (code) {
        case ProtoCode::Ok: return "ok";
        case ProtoCode::BadMagic: return "bad-magic";
        case ProtoCode::Truncated: return "truncated";
        case ProtoCode::VersionMismatch: return "version-mismatch";
        case ProtoCode::FrameTooLarge: return "frame-too-large";
        case ProtoCode::Malformed: return "malformed";
        case ProtoCode::ServerError: return "server-error";
    }
    return "unknown";
}

const char* to_string(RemoteStatus status) {
    switch (status) {
        case RemoteStatus::Ok: return "ok";
        case RemoteStatus::Timeout: return "timeout";
        case RemoteStatus::ConnectionRefused: return "connection-refused";
        case RemoteStatus::ConnectionClosed: return "connection-closed";
        case RemoteStatus::ProtocolViolation: return "protocol-violation";
        case RemoteStatus::IoError: return "io-error";
    }
    return "unknown";
}

std::vector<std::uint8_t> encode_request(const NvsRequest& req) {
    check_counts(req.sources.size(), req.targets.size());
    const int w0 = req.sources.front().image.width;
    const int h0 = req.sources.front().image.height;
    for (const SourceView& sv : req.sources) {
        if (sv.image.width != w0 || sv.image.height != h0)
            throw std::invalid_argument("nvs request: source images must share dimensions");
        if (sv.image.width != sv.intrinsics.width || sv.image.height != sv.intrinsics.height)
            throw std::invalid_argument("nvs request: image dimensions disagree with intrinsics");
        if (sv.image.pixels.size() != static_cast<size_t>(w0) * h0 * 3)
            throw std::invalid_argument("nvs request: source pixel buffer has the wrong size");
    }

    std::vector<std::uint8_t> payload;
    payload.push_back(req.version);
    payload.push_back(kTypeRequest);
    put_u64(payload, req.request_id);
    put_u32(payload, static_cast<std::uint32_t>(req.sources.size()));
    put_u32(payload, static_cast<std::uint32_t>(req.targets.size()));
    for (const SourceView& sv : req.sources) {
        put_camera(payload, sv.intrinsics, sv.pose);
        payload.insert(payload.end(), sv.image.pixels.begin(), sv.image.pixels.end());
    }
    for (const TargetView& tv : req.targets) put_camera(payload, tv.intrinsics, tv.pose);
    return wrap_frame(payload);
}

NvsRequest decode_request(const std::vector<std::uint8_t>& frame, std::size_t frame_limit) {
    Cursor cur = open_frame(frame, frame_limit);
    NvsRequest req;
    req.version = cur.u8();
    if (req.version != kProtocolVersion)
        throw ProtocolError(ProtoCode::VersionMismatch, "unsupported protocol version");
    if (cur.u8() != kTypeRequest) throw ProtocolError(ProtoCode::Malformed, "frame is not a request");
    req.request_id = cur.u64();
    const std::uint32_t n_sources = cur.u32();
    const std::uint32_t n_targets = cur.u32();
    if (n_sources < 1 || n_targets < 1)
        throw ProtocolError(ProtoCode::Malformed, "request must carry at least one source and target");

    req.sources.resize(n_sources);
    for (SourceView& sv : req.sources) {
        get_camera(cur, &sv.intrinsics, &sv.pose);
        sv.image = Image(sv.intrinsics.width, sv.intrinsics.height);
        cur.bytes(sv.image.pixels.data(), sv.image.pixels.size());
    }
    for (std::uint32_t i = 0; i < n_targets; ++i) {
        TargetView tv;
        get_camera(cur, &tv.intrinsics, &tv.pose);
        req.targets.push_back(tv);
    }
    if (cur.remaining != 0) throw ProtocolError(ProtoCode::Malformed, "trailing bytes after request body");
    const int w0 = req.sources.front().image.width;
    const int h0 = req.sources.front().image.height;
    for (const SourceView& sv : req.sources)
        if (sv.image.width != w0 || sv.image.height != h0)
            throw ProtocolError(ProtoCode::Malformed, "source images must share dimensions");
    return req;
}

std::vector<std::uint8_t> encode_response(const NvsResponse& resp) {
    std::vector<std::uint8_t> payload;
    payload.push_back(kProtocolVersion);
    payload.push_back(kTypeResponse);
    put_u64(payload, resp.request_id);
    payload.push_back(static_cast<std::uint8_t>(resp.status));
    if (resp.status == ProtoCode::Ok) {
        put_u32(payload, static_cast<std::uint32_t>(resp.images.size()));
        for (const Image& img : resp.images) {
            put_u32(payload, static_cast<std::uint32_t>(img.width));
            put_u32(payload, static_cast<std::uint32_t>(img.height));
            payload.insert(payload.end(), img.pixels.begin(), img.pixels.end());
        }
    } else {
        put_u32(payload, static_cast<std::uint32_t>(resp.message.size()));
        payload.insert(payload.end(), resp.message.begin(), resp.message.end());
    }
    return wrap_frame(payload);
}

NvsResponse decode_response(const std::vector<std::uint8_t>& frame, std::size_t frame_limit) {
    Cursor cur = open_frame(frame, frame_limit);
    NvsResponse resp;
    const std::uint8_t version = cur.u8();
    if (version != kProtocolVersion)
        throw ProtocolError(ProtoCode::VersionMismatch, "unsupported protocol version");
    if (cur.u8() != kTypeResponse) throw ProtocolError(ProtoCode::Malformed, "frame is not a response");
    resp.request_id = cur.u64();
    const std::uint8_t status = cur.u8();
    if (status > static_cast<std::uint8_t>(ProtoCode::ServerError))
        throw ProtocolError(ProtoCode::Malformed, "unknown status code");
    resp.status = static_cast<ProtoCode>(status);
    if (resp.status == ProtoCode::Ok) {
        const std::uint32_t n = cur.u32();
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint32_t w = cur.u32();
            const std::uint32_t h = cur.u32();
            if (w < 1 || h < 1 || w > kMaxImageDim || h > kMaxImageDim)
                throw ProtocolError(ProtoCode::Malformed, "bad response image dimensions");
            Image img(static_cast<int>(w), static_cast<int>(h));
            cur.bytes(img.pixels.data(), img.pixels.size());
            resp.images.push_back(std::move(img));
        }
    } else {
        const std::uint32_t len = cur.u32();
        resp.message.resize(len);
        cur.bytes(reinterpret_cast<std::uint8_t*>(resp.message.data()), len);
    }
    if (cur.remaining != 0) throw ProtocolError(ProtoCode::Malformed, "trailing bytes after response body");
    return resp;
}

// --- socket plumbing ------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

int ms_left(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return left < 0 ? 0 : static_cast<int>(left);
}

// Sends the whole buffer before the deadline; returns false on timeout/error.
bool send_all(int fd, const std::uint8_t* data, std::size_t len, Clock::time_point deadline,
              RemoteStatus* status) {
    std::size_t off = 0;
    while (off < len) {
        pollfd pfd{fd, POLLOUT, 0};
        const int pr = ::poll(&pfd, 1, ms_left(deadline));
        if (pr == 0) {
            *status = RemoteStatus::Timeout;
            return false;
        }
        if (pr < 0) {
            *status = RemoteStatus::IoError;
            return false;
        }
        const ssize_t n = ::send(fd, data + off, len - off, MSG_NOSIGNAL);
        if (n <= 0) {
            *status = (errno == EPIPE || errno == ECONNRESET) ? RemoteStatus::ConnectionClosed
                                                              : RemoteStatus::IoError;
            return false;
        }
        off += static_cast<std::size_t>(n);
    }
    return true;
}

// 0 = got everything, 1 = clean EOF before any byte, -1 = failure (status set).
int recv_all(int fd, std::uint8_t* data, std::size_t len, Clock::time_point deadline,
             RemoteStatus* status) {
    std::size_t off = 0;
    while (off < len) {
        pollfd pfd{fd, POLLIN, 0};
        const int pr = ::poll(&pfd, 1, ms_left(deadline));
        if (pr == 0) {
            *status = RemoteStatus::Timeout;
            return -1;
        }
        if (pr < 0) {
            *status = RemoteStatus::IoError;
            return -1;
        }
        const ssize_t n = ::recv(fd, data + off, len - off, 0);
        if (n == 0) {
            if (off == 0) return 1;
            *status = RemoteStatus::ConnectionClosed;
            return -1;
        }
        if (n < 0) {
            *status = RemoteStatus::IoError;
            return -1;
        }
        off += static_cast<std::size_t>(n);
    }
    return 0;
}

// Reads one full frame. Returns 0 on success, 1 on clean EOF, -1 otherwise.
int recv_frame(int fd, std::vector<std::uint8_t>* frame, Clock::time_point deadline,
               std::size_t frame_limit, RemoteStatus* status, ProtoCode* code) {
    frame->assign(8, 0);
    const int hr = recv_all(fd, frame->data(), 8, deadline, status);
    if (hr != 0) return hr;
    if (std::memcmp(frame->data(), kMagic, 4) != 0) {
        *status = RemoteStatus::ProtocolViolation;
        *code = ProtoCode::BadMagic;
        return -1;
    }
    const std::uint32_t len = static_cast<std::uint32_t>((*frame)[4]) |
                              (static_cast<std::uint32_t>((*frame)[5]) << 8) |
                              (static_cast<std::uint32_t>((*frame)[6]) << 16) |
                              (static_cast<std::uint32_t>((*frame)[7]) << 24);
    if (static_cast<std::size_t>(len) + 8 > frame_limit) {
        *status = RemoteStatus::ProtocolViolation;
        *code = ProtoCode::FrameTooLarge;
        return -1;
    }
    frame->resize(8 + len);
    const int br = recv_all(fd, frame->data() + 8, len, deadline, status);
    if (br == 1) {
        *status = RemoteStatus::ProtocolViolation;
        *code = ProtoCode::Truncated;
        return -1;
    }
    return br;
}

struct UniqueFd {
    int fd = -1;
    ~UniqueFd() {
        if (fd >= 0) ::close(fd);
    }
    int release() {
        const int f = fd;
        fd = -1;
        return f;
    }
};

}  // namespace

RemoteResult synthesize_remote(const Endpoint& endpoint, const NvsRequest& req, int timeout_ms) {
    RemoteResult result;
    const auto start = Clock::now();
    const auto deadline = start + std::chrono::milliseconds(timeout_ms);
    auto finish = [&](RemoteStatus st, std::string detail) {
        result.status = st;
        result.detail = std::move(detail);
        result.latency_ms =
            std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        return result;
    };

    std::vector<std::uint8_t> out_frame;
    try {
        out_frame = encode_request(req);
    } catch (const std::exception& e) {
        return finish(RemoteStatus::ProtocolViolation, e.what());
    }

    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* addrs = nullptr;
    const int gai = ::getaddrinfo(endpoint.host.c_str(), std::to_string(endpoint.port).c_str(),
                                  &hints, &addrs);
    if (gai != 0) return finish(RemoteStatus::IoError, std::string("resolve: ") + gai_strerror(gai));
    std::unique_ptr<addrinfo, decltype(&freeaddrinfo)> addrs_guard(addrs, &freeaddrinfo);

    UniqueFd sock;
    sock.fd = ::socket(addrs->ai_family, addrs->ai_socktype | SOCK_NONBLOCK, addrs->ai_protocol);
    if (sock.fd < 0) return finish(RemoteStatus::IoError, "socket() failed");

    if (::connect(sock.fd, addrs->ai_addr, addrs->ai_addrlen) < 0) {
        if (errno == ECONNREFUSED) return finish(RemoteStatus::ConnectionRefused, "connect refused");
        if (errno != EINPROGRESS) return finish(RemoteStatus::IoError, "connect() failed");
        pollfd pfd{sock.fd, POLLOUT, 0};
        const int pr = ::poll(&pfd, 1, ms_left(deadline));
        if (pr == 0) return finish(RemoteStatus::Timeout, "connect timed out");
        if (pr < 0) return finish(RemoteStatus::IoError, "poll() failed");
        int err = 0;
        socklen_t len = sizeof(err);
        ::getsockopt(sock.fd, SOL_SOCKET, SO_ERROR, &err, &len);
        if (err == ECONNREFUSED) return finish(RemoteStatus::ConnectionRefused, "connect refused");
        if (err != 0) return finish(RemoteStatus::IoError, "connect failed");
    }

    RemoteStatus status = RemoteStatus::IoError;
    if (!send_all(sock.fd, out_frame.data(), out_frame.size(), deadline, &status))
        return finish(status, "sending request failed");

    std::vector<std::uint8_t> in_frame;
    ProtoCode code = ProtoCode::Ok;
    const int rr = recv_frame(sock.fd, &in_frame, deadline, kDefaultFrameLimit, &status, &code);
    if (rr == 1) return finish(RemoteStatus::ConnectionClosed, "server closed the connection");
    if (rr != 0)
        return finish(status, code == ProtoCode::Ok ? "receive failed" : to_string(code));

    try {
        result.response = decode_response(in_frame);
    } catch (const ProtocolError& e) {
        return finish(RemoteStatus::ProtocolViolation, e.what());
    }
    if (result.response.request_id != req.request_id)
        return finish(RemoteStatus::ProtocolViolation, "response id does not match request");
    return finish(RemoteStatus::Ok, "");
}

// --- mock server -----------------------------------------------------------

MockNvsServer::MockNvsServer(ServerMode mode) : mode_(std::move(mode)) {}

MockNvsServer::~MockNvsServer() { stop(); }

void MockNvsServer::start(const std::string& host, int port) {
    if (running_) throw std::logic_error("mock server already running");

    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* addrs = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &addrs) != 0)
        throw std::runtime_error("mock server: cannot resolve bind address " + host);
    std::unique_ptr<addrinfo, decltype(&freeaddrinfo)> addrs_guard(addrs, &freeaddrinfo);

    UniqueFd fd;
    fd.fd = ::socket(addrs->ai_family, addrs->ai_socktype, addrs->ai_protocol);
    if (fd.fd < 0) throw std::runtime_error("mock server: socket() failed");
    const int one = 1;
    ::setsockopt(fd.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd.fd, addrs->ai_addr, addrs->ai_addrlen) < 0)
        throw std::runtime_error("mock server: bind failed on " + host + ":" + std::to_string(port));
    if (::listen(fd.fd, 64) < 0) throw std::runtime_error("mock server: listen failed");

    sockaddr_storage bound{};
    socklen_t blen = sizeof(bound);
    ::getsockname(fd.fd, reinterpret_cast<sockaddr*>(&bound), &blen);
    if (bound.ss_family == AF_INET)
        port_ = ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
    else
        port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port);

    host_ = host;
    listen_fd_ = fd.release();
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void MockNvsServer::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
    {
        std::lock_guard<std::mutex> lock(conn_mutex_);
        for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> threads;
    {
        std::lock_guard<std::mutex> lock(conn_mutex_);
        threads.swap(conn_threads_);
    }
    for (std::thread& t : threads)
        if (t.joinable()) t.join();
}

void MockNvsServer::accept_loop() {
    while (running_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_) break;
            continue;
        }
        std::lock_guard<std::mutex> lock(conn_mutex_);
        conn_fds_.push_back(fd);
        conn_threads_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void MockNvsServer::serve_connection(int fd) {
    UniqueFd guard{fd};
    while (running_) {
        std::vector<std::uint8_t> frame;
        RemoteStatus status = RemoteStatus::IoError;
        ProtoCode code = ProtoCode::Ok;
        // generous per-frame deadline; idle connections are dropped
        const auto deadline = Clock::now() + std::chrono::seconds(30);
        const int rr = recv_frame(fd, &frame, deadline, kDefaultFrameLimit, &status, &code);
        if (rr == 1) return;  // client hung up cleanly
        if (rr != 0) {
            // bad magic / oversized / truncated input: close the stream
            return;
        }

        NvsResponse resp;
        bool close_after = false;
        try {
            const NvsRequest req = decode_request(frame);
            resp = process(req);
        } catch (const ProtocolError& e) {
            if (e.code == ProtoCode::BadMagic || e.code == ProtoCode::Truncated) return;
            resp.status = e.code;
            resp.message = e.what();
        } catch (const std::exception& e) {
            resp.status = ProtoCode::ServerError;
            resp.message = e.what();
            close_after = true;
        }

        const std::vector<std::uint8_t> out = encode_response(resp);
        RemoteStatus send_status = RemoteStatus::IoError;
        if (!send_all(fd, out.data(), out.size(), Clock::now() + std::chrono::seconds(30),
                      &send_status))
            return;
        if (close_after) return;
    }
}

NvsResponse MockNvsServer::process(const NvsRequest& req) const {
    NvsResponse resp;
    resp.request_id = req.request_id;

    if (std::holds_alternative<EchoMode>(mode_)) {
        for (std::size_t i = 0; i < req.targets.size(); ++i) {
            const Image& src = req.sources[i % req.sources.size()].image;
            if (src.width != req.targets[i].intrinsics.width ||
                src.height != req.targets[i].intrinsics.height) {
                resp.status = ProtoCode::ServerError;
                resp.message = "echo mode cannot resize to the requested target";
                resp.images.clear();
                return resp;
            }
            resp.images.push_back(src);
        }
        return resp;
    }

    if (const OracleMode* oracle = std::get_if<OracleMode>(&mode_)) {
        for (std::size_t i = 0; i < req.targets.size(); ++i) {
            camgeom::CameraModel cam{"target" + std::to_string(i), req.targets[i].intrinsics,
                                     req.targets[i].pose};
            resp.images.push_back(scenesim::render(oracle->scene, cam).image);
        }
        return resp;
    }

    const GeomBaselineMode& geom = std::get<GeomBaselineMode>(mode_);
    // depth for the request's RGB comes from the held scene
    std::vector<warpcore::DepthMap> depths;
    std::vector<camgeom::CameraModel> sources;
    for (std::size_t i = 0; i < req.sources.size(); ++i) {
        camgeom::CameraModel cam{"source" + std::to_string(i), req.sources[i].intrinsics,
                                 req.sources[i].pose};
        depths.push_back(scenesim::render(geom.scene, cam).depth);
        sources.push_back(cam);
    }
    for (std::size_t i = 0; i < req.targets.size(); ++i) {
        camgeom::CameraModel target{"target" + std::to_string(i), req.targets[i].intrinsics,
                                    req.targets[i].pose};
        warpcore::SplatBuffer buf(target, geom.splat);
        for (std::size_t s = 0; s < sources.size(); ++s)
            buf.add_view(req.sources[s].image, depths[s], sources[s], static_cast<int>(s));
        auto [img, mask] = buf.resolve();
        resp.images.push_back(inpaint::adapt_and_fill(img, mask, geom.inpaint).image);
    }
    return resp;
}

}  // namespace viewadapt::nvslink
