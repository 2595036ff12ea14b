#include "batann/io_engine.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace batann {

void FakeIoEngine::submit(std::uint32_t sector, std::uint64_t token) {
  auto ready = std::chrono::steady_clock::now() + std::chrono::microseconds(latency_us_);
  pending_.push_back({token, sector, ready});
  ++reads_;
}

std::size_t FakeIoEngine::poll(std::vector<IoCompletion>& out) {
  std::size_t n = 0;
  auto now = std::chrono::steady_clock::now();
  while (!pending_.empty() && pending_.front().ready <= now) {
    const Pending& p = pending_.front();
    IoCompletion c;
    c.token = p.token;
    c.sector = p.sector;
    std::uint64_t off = std::uint64_t(p.sector) * kSectorSize;
    if (off + kSectorSize > sectors_->size()) {
      c.status = EIO;
    } else {
      c.data = sectors_->data() + off;
    }
    out.push_back(c);
    pending_.pop_front();
    ++n;
  }
  return n;
}

// ---- ThreadIoEngine ----

struct ThreadIoEngine::Impl {
  struct Request {
    std::uint32_t sector;
    std::uint64_t token;
    std::uint32_t buf;
  };

  int fd = -1;
  std::uint64_t data_offset = 0;
  std::uint32_t depth = 0;

  std::vector<std::uint8_t*> buffers;
  std::vector<std::uint32_t> free_bufs;

  std::mutex mu;
  std::condition_variable cv;
  std::deque<Request> queue;
  std::deque<IoCompletion> done;
  bool stopping = false;
  std::thread io_thread;

  ~Impl() {
    {
      std::lock_guard<std::mutex> g(mu);
      stopping = true;
    }
    cv.notify_all();
    if (io_thread.joinable()) io_thread.join();
    for (auto* b : buffers) ::free(b);
    if (fd >= 0) ::close(fd);
  }

  void loop() {
    for (;;) {
      Request req;
      {
        std::unique_lock<std::mutex> lk(mu);
        cv.wait(lk, [&] { return stopping || !queue.empty(); });
        if (stopping && queue.empty()) return;
        req = queue.front();
        queue.pop_front();
      }
      IoCompletion c;
      c.token = req.token;
      c.sector = req.sector;
      c.buf_id = req.buf;
      std::uint8_t* buf = buffers[req.buf];
      std::uint64_t off = data_offset + std::uint64_t(req.sector) * kSectorSize;
      ssize_t got = ::pread(fd, buf, kSectorSize, static_cast<off_t>(off));
      if (got != static_cast<ssize_t>(kSectorSize)) {
        c.status = got < 0 ? errno : EIO;
      } else {
        c.data = buf;
      }
      {
        std::lock_guard<std::mutex> g(mu);
        done.push_back(c);
      }
    }
  }
};

ThreadIoEngine::ThreadIoEngine(const std::string& path, std::uint64_t data_offset,
                               std::uint32_t queue_depth, bool use_direct)
    : impl_(new Impl) {
  int flags = O_RDONLY;
#ifdef O_DIRECT
  if (use_direct) flags |= O_DIRECT;
#endif
  impl_->fd = ::open(path.c_str(), flags);
  if (impl_->fd < 0 && use_direct) {
    impl_->fd = ::open(path.c_str(), O_RDONLY);  // buffered fallback
    use_direct = false;
  }
  if (impl_->fd < 0) throw std::runtime_error("ThreadIoEngine: cannot open " + path);
  direct_ = use_direct;
  impl_->data_offset = data_offset;
  impl_->depth = queue_depth;
  impl_->buffers.resize(queue_depth);
  for (std::uint32_t i = 0; i < queue_depth; ++i) {
    void* p = nullptr;
    if (posix_memalign(&p, kSectorSize, kSectorSize) != 0)
      throw std::runtime_error("ThreadIoEngine: buffer allocation failed");
    impl_->buffers[i] = static_cast<std::uint8_t*>(p);
    impl_->free_bufs.push_back(i);
  }
  impl_->io_thread = std::thread([this] { impl_->loop(); });
}

ThreadIoEngine::~ThreadIoEngine() = default;

void ThreadIoEngine::submit(std::uint32_t sector, std::uint64_t token) {
  std::uint32_t buf;
  {
    std::lock_guard<std::mutex> g(impl_->mu);
    if (impl_->free_bufs.empty()) {
      // depth exceeded: grow the pool rather than block or drop
      void* p = nullptr;
      if (posix_memalign(&p, kSectorSize, kSectorSize) != 0)
        throw std::runtime_error("ThreadIoEngine: buffer allocation failed");
      impl_->buffers.push_back(static_cast<std::uint8_t*>(p));
      impl_->free_bufs.push_back(static_cast<std::uint32_t>(impl_->buffers.size() - 1));
    }
    buf = impl_->free_bufs.back();
    impl_->free_bufs.pop_back();
    impl_->queue.push_back({sector, token, buf});
  }
  impl_->cv.notify_one();
  reads_.fetch_add(1, std::memory_order_relaxed);
}

std::size_t ThreadIoEngine::poll(std::vector<IoCompletion>& out) {
  std::lock_guard<std::mutex> g(impl_->mu);
  std::size_t n = impl_->done.size();
  while (!impl_->done.empty()) {
    out.push_back(impl_->done.front());
    impl_->done.pop_front();
  }
  return n;
}

void ThreadIoEngine::release(std::uint32_t buf_id) {
  std::lock_guard<std::mutex> g(impl_->mu);
  impl_->free_bufs.push_back(buf_id);
}

}  // namespace batann
