# Sphinx configuration for the MCIR reconstruction toolkit.
# https://www.sphinx-doc.org/en/master/usage/configuration.html
import os
import sys

os.environ.setdefault("MPLBACKEND", "Agg")
sys.path.append(os.path.abspath('..'))

project = 'MCIR'
copyright = '2026, Mayvsyanka'
author = 'Mayvsyanka'
release = '0.1.0'

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.mathjax']

# importing src.services.* pulls in the numeric stack; mock it for doc-only builds
autodoc_mock_imports = ['scipy', 'skimage', 'matplotlib']
autodoc_member_order = 'bysource'
autodoc_typehints = 'description'

templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

html_theme = 'nature'
html_static_path = ['_static']
