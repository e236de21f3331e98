# Copyright 2026 The trinoon Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import os
import sys

# Under ctest the package staged in the build tree must win over an
# editable install, whose import hook would otherwise take precedence.
if os.environ.get("TRINOON_EXPECT_STAGE"):
    sys.meta_path[:] = [f for f in sys.meta_path if "editable" not in type(f).__module__]
