import logging

mhrlearn_logger = logging.getLogger("mhrlearn")
