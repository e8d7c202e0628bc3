#include "warp/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <mutex>

#include "warp/errors.hpp"

extern char** environ;

namespace warp {

namespace {

std::mutex g_slot_mutex;
std::condition_variable g_slot_cv;
std::size_t g_active = 0;

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() { reset(); }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = o.fd_;
      o.fd_ = -1;
    }
    return *this;
  }

  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

void make_pipe(Fd& read_end, Fd& write_end) {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    throw SolverSpawnFailure(std::string("pipe: ") + std::strerror(errno));
  }
  read_end = Fd(fds[0]);
  write_end = Fd(fds[1]);
}

void ignore_sigpipe_once() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

ChildSlot::ChildSlot(std::size_t limit) {
  if (limit == 0) limit = 1;
  std::unique_lock lock(g_slot_mutex);
  g_slot_cv.wait(lock, [limit] { return g_active < limit; });
  ++g_active;
}

ChildSlot::~ChildSlot() {
  {
    std::lock_guard lock(g_slot_mutex);
    --g_active;
  }
  g_slot_cv.notify_all();
}

std::size_t ChildSlot::active() {
  std::lock_guard lock(g_slot_mutex);
  return g_active;
}

ProcessOutput run_process(const std::vector<std::string>& argv, std::string_view input,
                          std::chrono::milliseconds timeout) {
  if (argv.empty()) throw SolverSpawnFailure("empty solver command");
  ignore_sigpipe_once();

  Fd in_read, in_write, out_read, out_write;
  make_pipe(in_read, in_write);
  make_pipe(out_read, out_write);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_read.get(), STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_write.get(), STDOUT_FILENO);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, "/dev/null", O_WRONLY, 0);

  std::vector<char*> args;
  args.reserve(argv.size() + 1);
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = 0;
  int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw SolverSpawnFailure("cannot start '" + argv[0] + "': " + std::strerror(rc));
  }
  in_read.reset();
  out_write.reset();

  ::fcntl(in_write.get(), F_SETFL, O_NONBLOCK);
  ::fcntl(out_read.get(), F_SETFL, O_NONBLOCK);

  ProcessOutput out;
  std::size_t written = 0;
  if (input.empty()) in_write.reset();
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  char buf[4096];
  bool out_open = true;

  while (out_open) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      out.timed_out = true;
      break;
    }
    auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();

    pollfd fds[2];
    nfds_t count = 0;
    fds[count++] = {out_read.get(), POLLIN, 0};
    if (in_write.get() >= 0) fds[count++] = {in_write.get(), POLLOUT, 0};
    int ready = ::poll(fds, count, static_cast<int>(std::max<long long>(remaining, 1)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (count == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t n = ::write(in_write.get(), input.data() + written, input.size() - written);
      if (n > 0) written += static_cast<std::size_t>(n);
      if (n < 0 && errno != EAGAIN && errno != EINTR) written = input.size();
      if (written >= input.size()) in_write.reset();
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      ssize_t n = ::read(out_read.get(), buf, sizeof(buf));
      if (n > 0) {
        out.stdout_text.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || (errno != EAGAIN && errno != EINTR)) {
        out_open = false;
      }
    }
  }

  if (out.timed_out) ::kill(pid, SIGKILL);
  in_write.reset();
  out_read.reset();

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status)) {
    out.exit_status = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    out.exit_status = -WTERMSIG(status);
  }
  return out;
}

}  // namespace warp
