#include "regcd/process.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "regcd/errors.hpp"

namespace regcd {

ProcessResult run_process(const std::vector<std::string>& argv) {
    if (argv.empty()) throw PluginError("empty argument vector");

    int pipe_fd[2];
    if (pipe(pipe_fd) != 0)
        throw PluginError(std::string("pipe failed: ") + std::strerror(errno));

    const pid_t pid = fork();
    if (pid < 0) {
        close(pipe_fd[0]);
        close(pipe_fd[1]);
        throw PluginError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        // Child: both streams into the pipe, then exec.
        dup2(pipe_fd[1], STDOUT_FILENO);
        dup2(pipe_fd[1], STDERR_FILENO);
        close(pipe_fd[0]);
        close(pipe_fd[1]);
        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        // Reached only if exec failed.
        const std::string msg = "exec failed: " + argv[0] + ": " + std::strerror(errno) + "\n";
        ssize_t ignored = write(STDERR_FILENO, msg.c_str(), msg.size());
        (void)ignored;
        _exit(127);
    }

    close(pipe_fd[1]);
    ProcessResult result;
    char buffer[4096];
    ssize_t n;
    while ((n = read(pipe_fd[0], buffer, sizeof(buffer))) > 0)
        result.output.append(buffer, static_cast<std::size_t>(n));
    close(pipe_fd[0]);

    int status = 0;
    if (waitpid(pid, &status, 0) < 0)
        throw PluginError(std::string("waitpid failed: ") + std::strerror(errno));
    if (WIFSIGNALED(status))
        throw PluginError(argv[0] + " terminated by signal " +
                          std::to_string(WTERMSIG(status)));
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string make_temp_dir(const std::string& prefix) {
    const char* base = std::getenv("TMPDIR");
    std::string tmpl = (base && *base ? std::string(base) : std::string("/tmp"));
    if (tmpl.back() == '/') tmpl.pop_back();
    tmpl += "/" + prefix + "-XXXXXX";
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data()))
        throw PluginError(std::string("mkdtemp failed: ") + std::strerror(errno));
    return std::string(buf.data());
}

} // namespace regcd
