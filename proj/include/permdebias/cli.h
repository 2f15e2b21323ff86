// Copyright 2026 The permdebias Authors.
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

#pragma once

// Command-line front end. Subcommands: rerank, baseline, eval, bias-report,
// distill-build, synth, cache {stats, clear}.
//
// Settings resolve as flags > --config JSON file > environment > defaults.
// Exit status: 0 on success, 1 on runtime or per-query failures (the latter
// ignored under --keep-going), 2 on usage errors.

#include <iosfwd>

namespace permdebias {

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace permdebias
