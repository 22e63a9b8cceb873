def load_global_env(path=None):
    """Load ~/.env and a local .env (local values win) into os.environ"""
    from dotenv import load_dotenv
    from pathlib import Path

    load_dotenv(Path("~/.env").expanduser())
    load_dotenv(Path(path or ".env"), override=True)
