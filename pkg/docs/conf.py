# -*- coding: utf-8 -*-
#
# vtaobimanip documentation build configuration file
#
# This file is execfile()d with the current directory set to its
# containing dir.

import sys
import os
import json
import importlib.util

# workaround to allow automatic builds on RTD
# as well as local builds without sphinx_rtd_theme
rtd_theme = importlib.util.find_spec('sphinx_rtd_theme') is not None

sys.path.insert(0, os.path.abspath(os.pardir))

pkginfo_path = os.path.join(os.path.dirname(__file__),
                            os.pardir,
                            'vtaobimanip',
                            'vtaobimanip_info.json')
pkginfo = json.load(open(pkginfo_path))

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
    'sphinx.ext.coverage',
    'sphinx.ext.intersphinx',
    'sphinx.ext.napoleon',
    'sphinx.ext.mathjax',
]

intersphinx_mapping = {
    'numpy': ('https://numpy.org/doc/stable', None),
    'torch': ('https://pytorch.org/docs/stable', None),
}

# torch pulls in CUDA probing at import time, not needed for the docs
autodoc_mock_imports = ['torch']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = pkginfo['name']
copyright = pkginfo['copyright']
author = ",".join(pkginfo['authors'])
version = pkginfo['version']
release = version

exclude_patterns = ['_build']
pygments_style = 'sphinx'
todo_include_todos = False

html_theme = 'default'
if rtd_theme:
    html_theme = "sphinx_rtd_theme"
html_static_path = ['_static']
htmlhelp_basename = 'vtaobimanipdoc'

latex_documents = [
  (master_doc, 'vtaobimanip.tex', u'vtaobimanip Documentation',
   u'by the VTAO-BiManip developers', 'manual'),
]

man_pages = [
    (master_doc, 'vtaobimanip', u'vtaobimanip Documentation',
     [author], 1)
]
