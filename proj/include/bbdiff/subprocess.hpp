// Copyright 2026 The bbdiff Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BBDIFF_SUBPROCESS_HPP
#define BBDIFF_SUBPROCESS_HPP

#include <map>
#include <string>

namespace bbdiff {

struct RunResult {
  bool spawn_failed = false;
  bool timed_out = false;
  int exit_code = -1;
  std::string stdout_text;
  std::string error; // spawn failure detail
};

// Runs `command` through /bin/sh -c with `input` piped to stdin and stdout
// captured. On timeout the whole process group is killed. Extra environment
// variables are added on top of the inherited environment.
RunResult run_command(const std::string &command, const std::string &input,
                      double timeout_seconds,
                      const std::map<std::string, std::string> &env = {});

} // namespace bbdiff

#endif // BBDIFF_SUBPROCESS_HPP
