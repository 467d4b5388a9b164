# coding=utf-8

########################################################################################################################
### Package metadata. Keep the version in sync with chiplet_io/__init__.py.

# The distribution name
package_name = "chiplet-io"

# The python package
package_dir = "chiplet_io"

# Read from the package so the CLI and the run manifest report the same version
import io
import os
import re

with io.open(os.path.join(os.path.dirname(os.path.abspath(__file__)), package_dir, "__init__.py"), encoding="utf-8") as f:
	package_version = re.search(r"^__version__ = ['\"]([^'\"]+)['\"]", f.read(), re.M).group(1)

package_description = """
Design-space exploration for die-to-die chiplet I/O: package parasitic extraction for micro-bump and hybrid-bond
technology generations, CDM ESD clamp sizing on a transient circuit solver, eye analysis of a direct signaling link
with neighbour crosstalk, and an area/bandwidth comparison of AIB and DSL I/O arrays against compute demand.
"""

package_author = "The chiplet-io developers"

package_license = "AGPLv3"

# Runtime requirements
package_requires = [
	"numpy>=1.21",
	"scipy>=1.8",
	"matplotlib>=3.5",
	"PyYAML>=5.4",
	"sentry-sdk>=1.5.12",
	"distro>=1.6.0",
]

### --------------------------------------------------------------------------------------------------------------------
### More advanced options that you usually shouldn't have to touch follow after this point
### --------------------------------------------------------------------------------------------------------------------

# Shipped configuration presets
package_additional_data = ["presets/*.yaml"]

additional_setup_parameters = {
	"extras_require": {"test": ["pytest>=6.0"]},
	"entry_points": {"console_scripts": ["chiplet-io = chiplet_io.cli:main"]},
}

########################################################################################################################

from setuptools import find_packages, setup

setup_parameters = dict(
	name=package_name,
	version=package_version,
	description=package_description.strip(),
	author=package_author,
	license=package_license,
	packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
	package_data={package_dir: package_additional_data},
	include_package_data=True,
	install_requires=package_requires,
	python_requires=">=3.7",
)

if len(additional_setup_parameters):
	setup_parameters.update(additional_setup_parameters)

setup(**setup_parameters)
