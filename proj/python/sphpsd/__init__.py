# Copyright 2026 The sphpsd Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Spherical-array PSD estimation and source separation."""

import json

from ._core import *  # noqa: F401,F403
from ._core import simulate as _simulate


def simulate(scene, geometry, threads=1):
    """Render a scene given as a dict or JSON string."""
    return _simulate(scene if isinstance(scene, str) else json.dumps(scene), geometry, threads)
