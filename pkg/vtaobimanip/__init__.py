__all__ = [
    '__version__',
    'HandModel',
    'build_hand_model',
    'load_hand_model',
    'forward_kinematics',
    'link_positions',
    'target_vectors',
    'SolverConfig',
    'objective',
    'retarget_frame',
    'retarget_trajectory',
    'retarget_batch',
    'GeneratorConfig',
    'VTAODataset',
    'align_streams',
    'binarize_tactile',
    'make_object_label',
    'generate_synthetic_dataset',
    'load_dataset',
    'ModelConfig',
    'VTAOModel',
    'configure_ablation',
    'sample_mask',
    'PretrainConfig',
    'pretrain',
    'load_checkpoint',
    'BottleSpec',
    'EnvConfig',
    'BimanualCapEnv',
    'VecBimanualEnv',
    'make_bottle_sets',
    'reward_stage1',
    'reward_stage2',
    'detect_success',
    'PPOConfig',
    'train_curriculum',
    'evaluate',
    'SuccessTracker',
    'resolve_config',
    'noise',
    'Plot',
    ]

import os
import json

# Get version number from json metadata
pkginfo_path = os.path.join(os.path.dirname(__file__),
                            'vtaobimanip_info.json')
with open(pkginfo_path) as fp:
    pkginfo = json.load(fp)
__version__ = pkginfo["version"]

from .kinematics import HandModel
from .kinematics import build_hand_model
from .kinematics import load_hand_model
from .kinematics import forward_kinematics
from .kinematics import link_positions
from .kinematics import target_vectors

from .retargeting import SolverConfig
from .retargeting import objective
from .retargeting import retarget_frame
from .retargeting import retarget_trajectory
from .retargeting import retarget_batch

from .dataset import GeneratorConfig
from .dataset import VTAODataset
from .dataset import align_streams
from .dataset import binarize_tactile
from .dataset import make_object_label
from .dataset import generate_synthetic_dataset
from .dataset import load_dataset

# masked transformer and its pretraining loop
from .model import ModelConfig
from .model import VTAOModel
from .model import configure_ablation
from .model import sample_mask
from .pretrain import PretrainConfig
from .pretrain import pretrain
from .pretrain import load_checkpoint

from .environment import BottleSpec
from .environment import EnvConfig
from .environment import BimanualCapEnv
from .environment import VecBimanualEnv
from .environment import make_bottle_sets
from .environment import reward_stage1
from .environment import reward_stage2
from .environment import detect_success

from .rl import PPOConfig
from .rl import train_curriculum
from .rl import evaluate

# realtime statistics
from .realtime import SuccessTracker

from .config import resolve_config

# noise generation
from . import noise

from .plot import Plot

# end of file __init__.py
