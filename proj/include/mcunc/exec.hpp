/*
   Copyright 2026 The mcunc Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

namespace mcunc {

/// Selects the serial reference loop or the OpenMP loop for data-parallel
/// kernels. Both produce bitwise-identical results: per-item work is the same
/// sequential code, only the distribution over items differs.
enum class Exec { serial, parallel };

/// Threads OpenMP will use for `Exec::parallel` (1 when built without OpenMP).
int max_threads() noexcept;

}  // namespace mcunc
