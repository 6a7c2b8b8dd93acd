# Пустой файл для инициализации пакета модулей
