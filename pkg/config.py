from pathlib import Path
import logging


class Config:
    BASE_DIR = Path(__file__).parent

    # 目录配置
    CONFIG_DIR = BASE_DIR / "config"
    SETTINGS_FILE = CONFIG_DIR / "sim_config.yaml"
    LOG_DIR = BASE_DIR / "logs"

    # GF(2) 内核
    WORD_BITS = 64
    FOUR_RUSSIANS_MIN_WIDTH = 256  # 列数达到该值时乘法改用四俄罗斯人查表

    # 分解与模拟
    DENSE_CUTOFF = 256  # 未给树分解时，n 不超过该值走单包稠密路径
    BINARIZE_BAG_FACTOR = 4  # 二叉化后包数目标 4n/max(τ,1) + 原包数
    SAMPLE_BATCH = 64  # 按字宽分批
    T_CAP = 20

    # 规模上限
    MAX_DENSE_QUBITS = 14
    MAX_BRUTE_QUBITS = 20
    MAX_ORBIT_VERTICES = 8
    MAX_DIAMETER_VERTICES = 7

    # 运行默认值
    DEFAULT_SEED = 0
    FLOAT_TOL = 1e-9


Config.LOG_DIR.mkdir(parents=True, exist_ok=True)

logging.basicConfig(
    level=logging.DEBUG,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(Config.LOG_DIR / 'ldlsim.log', encoding='utf-8'),
        logging.StreamHandler()
    ]
)
