/* LD_PRELOAD shim recording file opens to $TEXSAN_TRACE_FILE.
 *
 * Lines are "R <path>" for reads and "W <path>" for writes. This is the
 * access-trace oracle used to cross-check the compiler's recorder output:
 * it observes actual open() calls at the libc boundary, independent of
 * anything the compiler chooses to report.
 */
#define _GNU_SOURCE
#include <dlfcn.h>
#include <fcntl.h>
#include <limits.h>
#include <stdarg.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <unistd.h>

static int (*real_open)(const char*, int, ...) = NULL;
static int (*real_open64)(const char*, int, ...) = NULL;
static int (*real_openat)(int, const char*, int, ...) = NULL;
static FILE* (*real_fopen)(const char*, const char*) = NULL;
static FILE* (*real_fopen64)(const char*, const char*) = NULL;

static volatile int in_hook = 0;

static void record(const char* path, int writing) {
  if (in_hook) return;
  const char* trace = getenv("TEXSAN_TRACE_FILE");
  if (!trace || !path) return;
  if (strcmp(path, trace) == 0) return;
  in_hook = 1;
  if (!real_open) real_open = dlsym(RTLD_NEXT, "open");
  if (real_open) {
    int fd = real_open(trace, O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd >= 0) {
      char buf[PATH_MAX + 8];
      char resolved[PATH_MAX];
      const char* shown = path;
      if (path[0] != '/') {
        char cwd[PATH_MAX];
        if (getcwd(cwd, sizeof(cwd)) &&
            (size_t)snprintf(resolved, sizeof(resolved), "%s/%s", cwd, path) <
                sizeof(resolved))
          shown = resolved;
      }
      int n = snprintf(buf, sizeof(buf), "%c %s\n", writing ? 'W' : 'R', shown);
      if (n > 0) {
        ssize_t unused = write(fd, buf, (size_t)n);
        (void)unused;
      }
      close(fd);
    }
  }
  in_hook = 0;
}

int open(const char* path, int flags, ...) {
  mode_t mode = 0;
  if (flags & O_CREAT) {
    va_list ap;
    va_start(ap, flags);
    mode = va_arg(ap, mode_t);
    va_end(ap);
  }
  if (!real_open) real_open = dlsym(RTLD_NEXT, "open");
  record(path, (flags & O_ACCMODE) != O_RDONLY);
  return real_open(path, flags, mode);
}

int open64(const char* path, int flags, ...) {
  mode_t mode = 0;
  if (flags & O_CREAT) {
    va_list ap;
    va_start(ap, flags);
    mode = va_arg(ap, mode_t);
    va_end(ap);
  }
  if (!real_open64) real_open64 = dlsym(RTLD_NEXT, "open64");
  record(path, (flags & O_ACCMODE) != O_RDONLY);
  return real_open64(path, flags, mode);
}

int openat(int dirfd, const char* path, int flags, ...) {
  mode_t mode = 0;
  if (flags & O_CREAT) {
    va_list ap;
    va_start(ap, flags);
    mode = va_arg(ap, mode_t);
    va_end(ap);
  }
  if (!real_openat) real_openat = dlsym(RTLD_NEXT, "openat");
  /* Relative-to-dirfd paths other than AT_FDCWD are not resolved; the
   * toolchain under test opens by cwd-relative or absolute path. */
  if (dirfd == AT_FDCWD || (path && path[0] == '/'))
    record(path, (flags & O_ACCMODE) != O_RDONLY);
  return real_openat(dirfd, path, flags, mode);
}

FILE* fopen(const char* path, const char* mode) {
  if (!real_fopen) real_fopen = dlsym(RTLD_NEXT, "fopen");
  record(path, mode && mode[0] != 'r');
  return real_fopen(path, mode);
}

FILE* fopen64(const char* path, const char* mode) {
  if (!real_fopen64) real_fopen64 = dlsym(RTLD_NEXT, "fopen64");
  record(path, mode && mode[0] != 'r');
  return real_fopen64(path, mode);
}
