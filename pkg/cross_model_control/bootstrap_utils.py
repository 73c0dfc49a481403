'''
Tools which must be available early on, before importing unrelated packages.
'''

def get_top_level_dir():
    '''
    Points to top-level of package, not repository.

    Note: might point to a zip file.
    '''
    from pathlib import Path
    from zipfile import ZipFile, is_zipfile

    top_level_dir = Path(__file__).parent

    if is_zipfile(top_level_dir):
        with ZipFile(top_level_dir, 'r') as top_level_zip:
            assert "__main__.py" in top_level_zip.namelist()
    else:
        assert (top_level_dir / "__main__.py").is_file()

    return top_level_dir

def find_pyproject_toml():
    '''
    `pyproject.toml` next to the package or one level up (a source checkout);
    None when running from an installed wheel.
    '''
    top_level_dir = get_top_level_dir()
    for candidate in (top_level_dir / "pyproject.toml", top_level_dir.parent / "pyproject.toml"):
        if candidate.is_file():
            return candidate
    return None

def requirement_module(requirement: str) -> str:
    '''
    Module to import for one `dependencies` entry.

    >>> requirement_module("torch>=2.2")
    'torch'
    >>> requirement_module("pandera[pandas] ; python_version >= '3.12'")
    'pandera'
    '''
    import re

    name = re.split(r"[\s\[<>=!~;@]", requirement.strip(), maxsplit=1)[0]
    return name.replace('-', '_')

def get_pkg_dependencies(pyproject_toml_path) -> list[str]:
    import tomllib

    with open(pyproject_toml_path, "rb") as toml_file:
        pyproject_toml = tomllib.load(toml_file)
    return list(pyproject_toml["project"]["dependencies"])

def ensure_pkg_dependencies():
    '''
    Insure this package's dependencies are installed,
    using data from top-level `pyproject.toml`.
    '''
    from importlib.util import find_spec

    pyproject_toml_path = find_pyproject_toml()
    if pyproject_toml_path is None:
        # built wheels might not include this file
        return

    for dependency in get_pkg_dependencies(pyproject_toml_path):
        module = requirement_module(dependency)
        if find_spec(module) is None:
            e = ModuleNotFoundError(name=module)
            e.msg = (f"No module named {module!r}\n\n"
                     f"Try installing the dependency:"
                     f" python -m pip install {dependency.split(';')[0].strip()}")
            raise e
